"""Command-line entry point.

Exit codes: 0 success, 1 domain error (non-convergence, empty matrix, bad
input file...), 2 usage error.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings
from pathlib import Path

from . import plotting
from .barrier import PotentialPoint, barrier_value, stability_report
from .errors import FitsinkError, NotConverged, ParseError
from .fitness import FCOptions, fc_solve
from .gauge import apply_gauge, equivalence_report
from .ingest import (
    BarrierAnalysis,
    dumps_result,
    is_binary,
    matrix_to_flows,
    parse_flows,
    presence_binarize,
    rca_binarize,
    write_flows,
)
from .model import GaugeSpec, ScalingProblem, generate_nested
from .nestedness import barrier_line, classify_pathways, reorder, trajectories
from .sinkhorn import sk_solve


class UsageError(Exception):
    pass


def _gauge(text):
    try:
        return GaugeSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _solver_flags(p, algorithm=True):
    p.add_argument("--input", required=True, help="flow CSV: country,product,value[,year]")
    if algorithm:
        p.add_argument("--algorithm", choices=("fc", "sk"), default="fc")
    p.add_argument("--schedule", choices=("jacobi", "gauss-seidel"), default=None,
                   help="update schedule (default: jacobi for fc, gauss-seidel for sk)")
    p.add_argument("--gauge", type=_gauge, default=GaugeSpec(),
                   help="normalization | dummy | reference-row:LABEL | reference-col:LABEL")
    p.add_argument("--tol", type=float, default=1e-13)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--log-domain", action="store_true", help="run Sinkhorn-Knopp on logarithms")
    p.add_argument("--year", type=int, default=None, help="select one year of a multi-year file")
    binarize = p.add_mutually_exclusive_group()
    binarize.add_argument("--rca-threshold", type=float, default=None,
                          help="binarize by Balassa RCA >= threshold (default 1.0 for non-binary input)")
    binarize.add_argument("--presence", action="store_true",
                          help="treat any positive value as an export")
    p.add_argument("--output", default=None, help="write the result here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="fitsink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _solver_flags(sub.add_parser("fit", help="solve FC or SK and print the result JSON"))
    _solver_flags(sub.add_parser("compare", help="FC vs SK equivalence report"), algorithm=False)
    _solver_flags(sub.add_parser("barrier", help="barrier potential, stability and Q/F barrier line"),
                  algorithm=False)

    p = sub.add_parser("reorder", help="reordered matrix JSON plus SVG portrait")
    _solver_flags(p, algorithm=False)
    p.add_argument("--svg", required=True, help="figure path (.svg, .png or .pdf)")

    p = sub.add_parser("classify", help="Learner/Exploiter/Explorer pathway report")
    _solver_flags(p, algorithm=False)
    p.add_argument("--near-band", type=float, default=0.5)
    p.add_argument("--gap-threshold", type=float, default=0.6931471805599453)
    p.add_argument("--figure", default=None, help="also draw export spectra to this file")
    p.add_argument("--countries", nargs="+", default=None, help="countries shown in --figure")

    p = sub.add_parser("trajectories", help="long-format ln fitness table over years")
    p.add_argument("--inputs", nargs="+", required=True, help="flow CSV files with a year column")
    p.add_argument("--gauge", type=_gauge, default=GaugeSpec("dummy_country"))
    p.add_argument("--income", default=None, help="CSV country,year,income")
    p.add_argument("--schedule", choices=("jacobi", "gauss-seidel"), default="jacobi")
    p.add_argument("--tol", type=float, default=1e-13)
    p.add_argument("--max-iter", type=int, default=100_000)
    binarize = p.add_mutually_exclusive_group()
    binarize.add_argument("--rca-threshold", type=float, default=None)
    binarize.add_argument("--presence", action="store_true")
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.add_argument("--mean-output", default=None, help="CSV of the yearly mean ln fitness")
    p.add_argument("--figure", default=None, help="trajectory figure path")

    p = sub.add_parser("generate", help="synthetic nested matrix as a 0/1 flow CSV")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    return parser


# ----------------------------------------------------------------- plumbing


def _binarize(flows, args, year=None):
    if args.presence or (args.rca_threshold is None and is_binary(flows)):
        return presence_binarize(flows, year=year)
    threshold = 1.0 if args.rca_threshold is None else args.rca_threshold
    return rca_binarize(flows, threshold, year=year)


def _load_matrix(args):
    flows = parse_flows(args.input)
    years = flows.years
    year = args.year
    if year is None and len(years) > 1:
        raise UsageError(f"{args.input} holds years {years}; choose one with --year")
    return _binarize(flows, args, year)


def _fc_options(args, default="jacobi"):
    return FCOptions(
        schedule=args.schedule or default,
        max_iterations=args.max_iter,
        value_tolerance=args.tol,
    )


def _solve_fc(matrix, args):
    options = _fc_options(args)
    result = fc_solve(matrix, options)
    if result.zero_limit_rows:
        names = ", ".join(result.row_labels[i] for i in result.zero_limit_rows)
        warnings.warn(f"fitness vanishes in the limit for: {names}")
    if args.gauge.kind != "normalization":
        result = apply_gauge(result, matrix, args.gauge, options)
    return result


def _solve_sk(matrix, args):
    return sk_solve(
        ScalingProblem.from_matrix(matrix),
        tolerance=args.tol,
        max_iterations=args.max_iter,
        log_domain=args.log_domain,
        schedule=args.schedule or "gauss-seidel",
    )


def _emit(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require_converged(result, what):
    if not result.converged:
        extra = " (TotalSupportSuspect)" if getattr(result, "total_support_suspect", False) else ""
        raise NotConverged(f"{what} did not converge after {result.iterations} iterations{extra}")


# ----------------------------------------------------------------- commands


def cmd_fit(args):
    matrix = _load_matrix(args)
    if args.algorithm == "sk":
        if args.gauge.kind != "normalization":
            raise UsageError("--gauge applies to the fc algorithm only")
        result = _solve_sk(matrix, args)
    else:
        result = _solve_fc(matrix, args)
    _emit(dumps_result(result), args.output)
    _require_converged(result, args.algorithm.upper())


def cmd_compare(args):
    matrix = _load_matrix(args)
    fc = fc_solve(matrix, _fc_options(args))
    sk = _solve_sk(matrix, args)
    _require_converged(fc, "FC")
    _require_converged(sk, "SK")
    _emit(dumps_result(equivalence_report(fc, sk)), args.output)


def cmd_barrier(args):
    matrix = _load_matrix(args)
    problem = ScalingProblem.from_matrix(matrix)
    sk = _solve_sk(matrix, args)
    _require_converged(sk, "SK")
    point = PotentialPoint(list(sk.log_u) + list(sk.log_v), matrix.shape[0])
    fc = _solve_fc(matrix, args)
    _require_converged(fc, "FC")
    analysis = BarrierAnalysis(
        barrier_value(problem, point),
        stability_report(problem, point),
        barrier_line(matrix, fc.fitness, fc.complexity),
    )
    _emit(dumps_result(analysis), args.output)


def cmd_reorder(args):
    matrix = _load_matrix(args)
    fc = _solve_fc(matrix, args)
    _require_converged(fc, "FC")
    ordered = reorder(matrix, fc.fitness_order, fc.complexity_order)
    line = barrier_line(matrix, fc.fitness, fc.complexity)
    plotting.render_matrix_svg(ordered, line, args.svg)
    _emit(dumps_result(ordered), args.output)


def cmd_classify(args):
    matrix = _load_matrix(args)
    fc = _solve_fc(matrix, args)
    _require_converged(fc, "FC")
    report = classify_pathways(
        matrix, fc.fitness, fc.complexity, near_band=args.near_band, gap_threshold=args.gap_threshold
    )
    if args.figure:
        countries = args.countries or plotting.representative_countries(report)
        line = barrier_line(matrix, fc.fitness, fc.complexity)
        plotting.render_spectra(matrix, fc.fitness, fc.complexity, countries, line, args.figure)
    _emit(dumps_result(report), args.output)


def _read_income(path):
    income = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"country", "year", "income"} - set(reader.fieldnames or ())
        if missing:
            raise ParseError(f"income file lacks column(s) {sorted(missing)}", 1)
        for row in reader:
            try:
                income[(row["country"].strip(), int(row["year"]))] = float(row["income"])
            except ValueError:
                raise ParseError(f"bad income row {row}", reader.line_num) from None
    return income


def cmd_trajectories(args):
    options = FCOptions(schedule=args.schedule, max_iterations=args.max_iter, value_tolerance=args.tol)
    yearly = []
    for path in args.inputs:
        flows = parse_flows(path)
        if not flows.years:
            raise ParseError(f"{path} has no year column")
        for year in flows.years:
            matrix = _binarize(flows, args, year)
            result = fc_solve(matrix, options)
            _require_converged(result, f"FC for {year}")
            yearly.append((year, apply_gauge(result, matrix, args.gauge, options)))
    income = _read_income(args.income) if args.income else None
    table = trajectories(yearly, income)

    out = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["year", "country", "ln_fitness", "ln_income"])
        for r in table.records:
            writer.writerow([r.year, r.country, repr(r.ln_fitness), "" if r.ln_income is None else repr(r.ln_income)])
    finally:
        if args.output:
            out.close()
    if args.mean_output:
        with open(args.mean_output, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["year", "mean_ln_fitness"])
            for year in sorted(table.mean_ln_fitness):
                writer.writerow([year, repr(table.mean_ln_fitness[year])])
    if args.figure:
        plotting.render_trajectories(table, args.figure)


def cmd_generate(args):
    if args.rows < 1 or args.cols < 1:
        raise UsageError("--rows and --cols must be positive")
    matrix = generate_nested(args.rows, args.cols, args.noise, args.seed)
    flows = matrix_to_flows(matrix)
    if args.output:
        write_flows(flows, args.output)
    else:
        write_flows(flows, sys.stdout)


COMMANDS = {
    "fit": cmd_fit,
    "compare": cmd_compare,
    "barrier": cmd_barrier,
    "reorder": cmd_reorder,
    "classify": cmd_classify,
    "trajectories": cmd_trajectories,
    "generate": cmd_generate,
}


def _error_prefix():
    if os.environ.get("NO_COLOR") is None and sys.stderr.isatty():
        return "\033[31merror:\033[0m"
    return "error:"


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    previous = warnings.showwarning
    warnings.showwarning = _show_warning
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{_error_prefix()} {exc}", file=sys.stderr)
        return 2
    except (FitsinkError, ValueError, OSError) as exc:
        print(f"{_error_prefix()} {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    finally:
        warnings.showwarning = previous
    return 0


if __name__ == "__main__":
    sys.exit(main())
