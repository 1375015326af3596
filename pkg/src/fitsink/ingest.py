"""Flow CSV ingestion, binarization and JSON result files."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .barrier import StabilityReport
from .errors import EmptyMatrix, MissingColumn, ParseError, SchemaVersionMismatch
from .gauge import EquivalenceReport
from .model import BipartiteMatrix, FCResult, GaugeSpec, drop_empty
from .nestedness import (
    BarrierLine,
    CountryPathway,
    OrderedMatrix,
    PathwayReport,
    Trajectories,
    TrajectoryRecord,
)
from .sinkhorn import ScalingSolution

SCHEMA_VERSION = 1
REQUIRED_COLUMNS = ("country", "product", "value")


@dataclass(frozen=True)
class FlowRecord:
    country: str
    product: str
    value: float
    year: Optional[int] = None


@dataclass(frozen=True)
class FlowTable:
    records: tuple
    duplicates: int = 0

    @property
    def years(self):
        return sorted({r.year for r in self.records if r.year is not None})

    def for_year(self, year):
        return FlowTable(tuple(r for r in self.records if r.year == year))


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def parse_flows(source) -> FlowTable:
    """Read ``country,product,value[,year]`` CSV from a path or text stream.

    Duplicate ``(country, product, year)`` keys keep the last value and are
    counted in ``FlowTable.duplicates`` with a warning.
    """
    handle, owned = _open_text(source)
    try:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        except csv.Error as exc:
            raise ParseError(str(exc), 1) from None
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise MissingColumn(f"missing column(s) {', '.join(missing)}", 1)
        idx = {name: header.index(name) for name in REQUIRED_COLUMNS}
        year_idx = header.index("year") if "year" in header else None
        table = {}
        duplicates = 0
        try:
            for row in reader:
                line = reader.line_num
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(header):
                    raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
                try:
                    value = float(row[idx["value"]])
                except ValueError:
                    raise ParseError(f"bad value {row[idx['value']]!r}", line) from None
                if not math.isfinite(value) or value < 0:
                    raise ParseError(f"value must be finite and non-negative, got {value!r}", line)
                year = None
                if year_idx is not None and row[year_idx].strip():
                    try:
                        year = int(row[year_idx])
                    except ValueError:
                        raise ParseError(f"bad year {row[year_idx]!r}", line) from None
                country = row[idx["country"]].strip()
                product = row[idx["product"]].strip()
                if not country or not product:
                    raise ParseError("empty country or product label", line)
                key = (country, product, year)
                if key in table:
                    duplicates += 1
                table[key] = FlowRecord(country, product, value, year)
        except csv.Error as exc:
            raise ParseError(str(exc), reader.line_num) from None
    finally:
        if owned:
            handle.close()
    if duplicates:
        warnings.warn(f"{duplicates} duplicate flow keys; kept the last value", stacklevel=2)
    return FlowTable(tuple(table.values()), duplicates)


def write_flows(table: FlowTable, target) -> None:
    with_year = any(r.year is not None for r in table.records)
    handle, owned = (open(target, "w", newline="", encoding="utf-8"), True) if isinstance(
        target, (str, Path)
    ) else (target, False)
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["country", "product", "value"] + (["year"] if with_year else []))
        for r in table.records:
            row = [r.country, r.product, repr(float(r.value))]
            if with_year:
                row.append("" if r.year is None else str(r.year))
            writer.writerow(row)
    finally:
        if owned:
            handle.close()


def matrix_to_flows(matrix: BipartiteMatrix, year=None) -> FlowTable:
    """Every cell as a 0/1 flow record, so all labels survive the round trip."""
    return FlowTable(
        tuple(
            FlowRecord(c, p, float(matrix.entries[i, j]), year)
            for i, c in enumerate(matrix.row_labels)
            for j, p in enumerate(matrix.col_labels)
        )
    )


def _dense(flows: FlowTable, year):
    records = flows.records
    years = {r.year for r in records}
    if year is not None:
        records = [r for r in records if r.year == year]
    elif len(years) > 1:
        raise ValueError(f"flow table spans several years {sorted(y for y in years if y is not None)}; pick one")
    countries = list(dict.fromkeys(r.country for r in records))
    products = list(dict.fromkeys(r.product for r in records))
    if not countries:
        raise EmptyMatrix("no flow records")
    ci = {c: i for i, c in enumerate(countries)}
    pi = {p: j for j, p in enumerate(products)}
    values = np.zeros((len(countries), len(products)))
    for r in records:
        values[ci[r.country], pi[r.product]] = r.value
    return values, countries, products


def _finish(entries, countries, products):
    if not entries.any():
        raise EmptyMatrix("every cell fell below the threshold")
    matrix, _ = drop_empty(BipartiteMatrix(entries.astype(np.int8), countries, products))
    return matrix


def rca_binarize(flows: FlowTable, threshold=1.0, year=None) -> BipartiteMatrix:
    """Balassa revealed comparative advantage, ``M = RCA >= threshold``."""
    values, countries, products = _dense(flows, year)
    total = values.sum()
    if not total > 0:
        raise EmptyMatrix("total flow value is zero")
    row = values.sum(axis=1, keepdims=True)
    col = values.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        rca = (values / row) / (col / total)
    rca = np.nan_to_num(rca, nan=0.0)
    return _finish(rca >= threshold, countries, products)


def presence_binarize(flows: FlowTable, year=None) -> BipartiteMatrix:
    """``M = 1`` wherever the flow value is positive."""
    values, countries, products = _dense(flows, year)
    return _finish(values > 0, countries, products)


def is_binary(flows: FlowTable) -> bool:
    return all(r.value in (0.0, 1.0) for r in flows.records)


# ------------------------------------------------------------------ JSON results


@dataclass(frozen=True)
class BarrierAnalysis:
    """Barrier potential, stability certificate and Q/F barrier line of one solve."""

    barrier_value: float
    stability: StabilityReport
    barrier_line: BarrierLine


def _vec(labels, values):
    return {str(k): float(v) for k, v in zip(labels, values)}


def _unvec(d):
    return tuple(d.keys()), np.array(list(d.values()), dtype=float)


def _encode(obj):
    if isinstance(obj, FCResult):
        return "fc_result", obj.gauge, {
            "fitness": _vec(obj.row_labels, obj.fitness),
            "complexity": _vec(obj.col_labels, obj.complexity),
            "iterations": obj.iterations,
            "converged": obj.converged,
            "residual": obj.residual,
            "zero_limit_rows": [obj.row_labels[i] for i in obj.zero_limit_rows],
            "schedule": obj.schedule,
            "fitness_order": _vec(obj.row_labels, obj.fitness_order),
            "complexity_order": _vec(obj.col_labels, obj.complexity_order),
        }
    if isinstance(obj, ScalingSolution):
        return "sk_solution", GaugeSpec(), {
            "u": _vec(obj.row_labels, obj.u),
            "v": _vec(obj.col_labels, obj.v),
            "log_u": _vec(obj.row_labels, obj.log_u),
            "log_v": _vec(obj.col_labels, obj.log_v),
            "iterations": obj.iterations,
            "converged": obj.converged,
            "marginal_residual": obj.marginal_residual,
            "total_support_suspect": obj.total_support_suspect,
            "log_domain": obj.log_domain,
        }
    if isinstance(obj, EquivalenceReport):
        d = dict(obj.__dict__)
        d["flags"] = list(obj.flags)
        return "equivalence_report", GaugeSpec(), d
    if isinstance(obj, PathwayReport):
        return "pathway_report", GaugeSpec(), {
            "threshold": obj.threshold,
            "near_band": obj.near_band,
            "gap_threshold": obj.gap_threshold,
            "countries": {c.country: {k: v for k, v in c.__dict__.items() if k != "country"} for c in obj.countries},
        }
    if isinstance(obj, BarrierLine):
        return "barrier_line", GaugeSpec(), {
            "threshold": obj.threshold,
            "attained_at": [list(pair) for pair in obj.attained_at],
        }
    if isinstance(obj, Trajectories):
        return "trajectories", obj.gauge or GaugeSpec(), {
            "records": [r.__dict__ for r in obj.records],
            "mean_ln_fitness": {str(y): v for y, v in obj.mean_ln_fitness.items()},
        }
    if isinstance(obj, BarrierAnalysis):
        return "barrier_analysis", GaugeSpec(), {
            "barrier_value": obj.barrier_value,
            "stability": _encode(obj.stability)[2],
            "barrier_line": _encode(obj.barrier_line)[2],
        }
    if isinstance(obj, StabilityReport):
        return "stability_report", GaugeSpec(), dict(obj.__dict__)
    if isinstance(obj, OrderedMatrix):
        m = obj.matrix
        return "ordered_matrix", GaugeSpec(), {
            "row_labels": list(m.row_labels),
            "col_labels": list(m.col_labels),
            "entries": m.entries.tolist(),
            "row_perm": obj.row_perm.tolist(),
            "col_perm": obj.col_perm.tolist(),
            "row_scores": obj.row_scores.tolist(),
            "col_scores": obj.col_scores.tolist(),
        }
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _decode(kind, gauge, data):
    if kind == "fc_result":
        rows, F = _unvec(data["fitness"])
        cols, Q = _unvec(data["complexity"])
        return FCResult(
            fitness=F,
            complexity=Q,
            iterations=int(data["iterations"]),
            converged=bool(data["converged"]),
            residual=float(data["residual"]),
            zero_limit_rows=tuple(rows.index(lab) for lab in data["zero_limit_rows"]),
            row_labels=rows,
            col_labels=cols,
            schedule=data["schedule"],
            gauge=gauge,
            fitness_order=_unvec(data["fitness_order"])[1] if "fitness_order" in data else None,
            complexity_order=_unvec(data["complexity_order"])[1] if "complexity_order" in data else None,
        )
    if kind == "sk_solution":
        rows, log_u = _unvec(data["log_u"])
        cols, log_v = _unvec(data["log_v"])
        return ScalingSolution(
            u=_unvec(data["u"])[1],
            v=_unvec(data["v"])[1],
            iterations=int(data["iterations"]),
            converged=bool(data["converged"]),
            marginal_residual=float(data["marginal_residual"]),
            total_support_suspect=bool(data["total_support_suspect"]),
            log_domain=bool(data["log_domain"]),
            row_labels=rows,
            col_labels=cols,
            log_u=log_u,
            log_v=log_v,
        )
    if kind == "equivalence_report":
        return EquivalenceReport(**{**data, "flags": tuple(data["flags"])})
    if kind == "pathway_report":
        countries = tuple(CountryPathway(country=k, **v) for k, v in data["countries"].items())
        return PathwayReport(data["threshold"], data["near_band"], data["gap_threshold"], countries)
    if kind == "barrier_line":
        return BarrierLine(float(data["threshold"]), tuple(tuple(p) for p in data["attained_at"]))
    if kind == "trajectories":
        return Trajectories(
            gauge,
            tuple(TrajectoryRecord(**r) for r in data["records"]),
            {int(y): v for y, v in data["mean_ln_fitness"].items()},
        )
    if kind == "barrier_analysis":
        return BarrierAnalysis(
            float(data["barrier_value"]),
            _decode("stability_report", gauge, data["stability"]),
            _decode("barrier_line", gauge, data["barrier_line"]),
        )
    if kind == "stability_report":
        return StabilityReport(**data)
    if kind == "ordered_matrix":
        return OrderedMatrix(
            BipartiteMatrix(np.array(data["entries"]), data["row_labels"], data["col_labels"]),
            np.array(data["row_perm"], dtype=int),
            np.array(data["col_perm"], dtype=int),
            np.array(data["row_scores"], dtype=float),
            np.array(data["col_scores"], dtype=float),
        )
    raise ParseError(f"unknown result kind {kind!r}")


def result_document(obj) -> dict:
    kind, gauge, data = _encode(obj)
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "gauge": gauge.to_dict(), "data": data}


def dumps_result(obj) -> str:
    return json.dumps(result_document(obj), indent=2) + "\n"


def loads_result(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict) or not {"schema_version", "kind", "data"} <= doc.keys():
        raise ParseError("not a result document")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema_version {doc['schema_version']!r} is not supported (expected {SCHEMA_VERSION})"
        )
    try:
        gauge = GaugeSpec.from_dict(doc.get("gauge") or {"kind": "normalization"})
        return _decode(doc["kind"], gauge, doc["data"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed {doc['kind']} data: {exc}") from None


def write_result(obj, path) -> None:
    Path(path).write_text(dumps_result(obj), encoding="utf-8")


def read_result(path):
    return loads_result(Path(path).read_text(encoding="utf-8"))


def flows_to_text(table: FlowTable) -> str:
    buf = io.StringIO()
    write_flows(table, buf)
    return buf.getvalue()
