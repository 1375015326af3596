import dataclasses
import io
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitsink import (
    BipartiteMatrix,
    EmptyMatrix,
    EmptyRemoved,
    FlowRecord,
    FlowTable,
    GaugeSpec,
    MissingColumn,
    ParseError,
    PotentialPoint,
    ScalingProblem,
    SchemaVersionMismatch,
    apply_gauge,
    barrier_line,
    barrier_value,
    classify_pathways,
    dumps_result,
    equivalence_report,
    fc_solve,
    loads_result,
    matrix_to_flows,
    parse_flows,
    presence_binarize,
    rca_binarize,
    read_result,
    reorder,
    sk_solve,
    stability_report,
    trajectories,
    write_flows,
    write_result,
)

from fitsink.ingest import BarrierAnalysis

from oracles import M_STAR


def _table(rows, year=None):
    return FlowTable(tuple(FlowRecord(c, p, float(v), year) for c, p, v in rows))


def _grid(values):
    values = np.asarray(values, dtype=float)
    return _table([(f"c{i + 1}", f"p{j + 1}", values[i, j]) for i in range(values.shape[0]) for j in range(values.shape[1])])


def _same(a, b):
    assert type(a) is type(b)
    for f in dataclasses.fields(a):
        x, y = getattr(a, f.name), getattr(b, f.name)
        if dataclasses.is_dataclass(x):
            _same(x, y)
        elif isinstance(x, np.ndarray):
            assert np.array_equal(x, y), f.name
        elif isinstance(x, tuple) and x and dataclasses.is_dataclass(x[0]):
            assert len(x) == len(y)
            for p, q in zip(x, y):
                _same(p, q)
        else:
            assert x == y, f.name


def test_parse_two_records():
    table = parse_flows(io.StringIO("country,product,value\nA,x,1.5\nB,y,2\n"))
    assert len(table.records) == 2 and table.duplicates == 0
    assert table.records[1] == FlowRecord("B", "y", 2.0, None)


def test_parse_year_column():
    table = parse_flows(io.StringIO("year,country,product,value\n2001,A,x,1\n2002,A,x,3\n"))
    assert table.years == [2001, 2002]
    assert len(table.for_year(2002).records) == 1


def test_negative_value_reports_line():
    with pytest.raises(ParseError) as err:
        parse_flows(io.StringIO("country,product,value\nA,x,1\nB,y,-2\n"))
    assert err.value.line == 3


@pytest.mark.parametrize("bad", ["nan", "inf", "abc", ""])
def test_bad_values_rejected(bad):
    with pytest.raises(ParseError):
        parse_flows(io.StringIO(f"country,product,value\nA,x,{bad}\n"))


def test_duplicate_key_keeps_last():
    with pytest.warns(UserWarning, match="duplicate"):
        table = parse_flows(io.StringIO("country,product,value\nA,x,1\nA,x,5\n"))
    assert len(table.records) == 1 and table.records[0].value == 5.0 and table.duplicates == 1


def test_missing_column_and_empty_file():
    with pytest.raises(MissingColumn):
        parse_flows(io.StringIO("country,value\nA,1\n"))
    with pytest.raises(ParseError):
        parse_flows(io.StringIO(""))


def test_ragged_row():
    with pytest.raises(ParseError) as err:
        parse_flows(io.StringIO("country,product,value\nA,x\n"))
    assert err.value.line == 2


def test_rca_uniform_flows_give_all_ones():
    m = rca_binarize(_grid(np.full((3, 4), 7.0)))
    assert m.entries.shape == (3, 4) and m.entries.all()


def test_rca_single_cell():
    with pytest.warns(EmptyRemoved):
        m = rca_binarize(_grid([[0, 0], [0, 3]]))
    assert m.entries.tolist() == [[1]] and m.row_labels == ("c2",) and m.col_labels == ("p2",)


def test_rca_two_by_two():
    m = rca_binarize(_grid([[4, 1], [1, 4]]))
    assert m.entries.tolist() == [[1, 0], [0, 1]]
    # RCA is 1.6 on the diagonal and 0.4 off it
    assert rca_binarize(_grid([[4, 1], [1, 4]]), threshold=1.6).entries.tolist() == [[1, 0], [0, 1]]
    with pytest.raises(EmptyMatrix):
        rca_binarize(_grid([[4, 1], [1, 4]]), threshold=1.7)
    assert rca_binarize(_grid([[4, 1], [1, 4]]), threshold=0.4).entries.all()


def test_rca_drops_empty_lines():
    # share-weighted RCA of a row averages to 1, so only a threshold above 1 or a zero row empties it
    flows = _grid([[4, 1, 0], [1, 4, 0], [1, 1, 0]])
    with pytest.warns(EmptyRemoved):
        m = rca_binarize(flows, threshold=1.5)
    assert m.row_labels == ("c1", "c2") and m.col_labels == ("p1", "p2")
    assert m.entries.tolist() == [[1, 0], [0, 1]]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1e-6, 0.5, 3.0, 1e6]))
def test_rca_is_scale_invariant(seed, k):
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 20, (4, 5)).astype(float)
    values[0, 0] = 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyRemoved)
        a = rca_binarize(_grid(values))
        b = rca_binarize(_grid(values * k))
    assert a == b


def test_presence_binarize():
    m = presence_binarize(_grid([[0, 2], [1, 0]]))
    assert m.entries.tolist() == [[0, 1], [1, 0]]


def test_multi_year_table_needs_a_year():
    flows = FlowTable(_table([("A", "x", 1)], 2000).records + _table([("A", "x", 1)], 2001).records)
    with pytest.raises(ValueError):
        rca_binarize(flows)
    assert rca_binarize(flows, year=2001).entries.tolist() == [[1]]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["A", "B", "C, Ltd", 'q"uote']),
            st.sampled_from(["x", "y", "z"]),
            st.floats(0, 1e12, allow_nan=False),
            st.one_of(st.none(), st.integers(1960, 2030)),
        ),
        min_size=1,
        max_size=12,
        unique_by=lambda t: (t[0], t[1], t[3]),
    )
)
def test_write_then_parse_is_identity(rows):
    table = FlowTable(tuple(FlowRecord(*r) for r in rows))
    buf = io.StringIO()
    write_flows(table, buf)
    buf.seek(0)
    assert parse_flows(buf).records == table.records


def test_matrix_flows_round_trip(mstar):
    back = presence_binarize(matrix_to_flows(mstar))
    assert back == mstar


def _every_kind():
    m = BipartiteMatrix(M_STAR)
    fc = fc_solve(m)
    sk = sk_solve(ScalingProblem.from_matrix(m))
    p = ScalingProblem.from_matrix(m)
    point = PotentialPoint.from_scaling(sk.u, sk.v)
    dummy = apply_gauge(fc, m, GaugeSpec("dummy_country"))
    return {
        "fc_result": fc,
        "fc_result_gauged": apply_gauge(fc, m, GaugeSpec("reference_col", "p3", 2.0)),
        "sk_solution": sk,
        "equivalence_report": equivalence_report(fc, sk),
        "pathway_report": classify_pathways(m, fc.fitness, fc.complexity),
        "barrier_line": barrier_line(m, fc.fitness, fc.complexity),
        "trajectories": trajectories([(2000, dummy), (2001, dummy)], income={("c1", 2000): 10.0}),
        "stability_report": stability_report(p, point),
        "barrier_analysis": BarrierAnalysis(
            barrier_value(p, point), stability_report(p, point), barrier_line(m, fc.fitness, fc.complexity)
        ),
        "ordered_matrix": reorder(m, fc.fitness, fc.complexity),
    }


@pytest.mark.parametrize("kind", list(_every_kind()))
def test_json_round_trip(kind, tmp_path):
    obj = _every_kind()[kind]
    path = tmp_path / "r.json"
    write_result(obj, path)
    _same(read_result(path), obj)
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1 and doc["kind"] == kind.replace("_gauged", "")


def test_fc_result_keys_by_label(mstar):
    doc = json.loads(dumps_result(fc_solve(mstar)))
    assert doc["data"]["fitness"] == pytest.approx({"c1": 1.2, "c2": 1.2, "c3": 0.6})
    assert doc["gauge"]["kind"] == "normalization"


def test_truncated_file(mstar):
    text = dumps_result(fc_solve(mstar))
    with pytest.raises(ParseError):
        loads_result(text[: len(text) // 2])


def test_schema_version_mismatch(mstar):
    doc = json.loads(dumps_result(fc_solve(mstar)))
    doc["schema_version"] = 999
    with pytest.raises(SchemaVersionMismatch):
        loads_result(json.dumps(doc))


@pytest.mark.parametrize(
    "text", ["[]", '{"schema_version": 1}', '{"schema_version": 1, "kind": "mystery", "data": {}}',
             '{"schema_version": 1, "kind": "fc_result", "data": {"fitness": {}}}']
)
def test_malformed_documents(text):
    with pytest.raises(ParseError):
        loads_result(text)
