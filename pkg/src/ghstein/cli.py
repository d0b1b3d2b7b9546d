"""Command-line interface.

Exit codes: 0 success or diagnostic pass, 1 diagnostic fail, 2 usage or I/O
error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import (GHParams, SampleSet, gh_cdf, gh_log_pdf, gh_mean, gh_sample,
                            gh_variance)
from .limits import default_case, gh_to_limit_convergence
from .moments import moment_table
from .numerics import QuadratureConfig, QuadratureError, RandomStream
from .stein import SteinSolution, h_from_spec, stein_discrepancy, thread_count

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _params(args) -> GHParams:
    return GHParams(args.lam, args.alpha, args.beta, args.delta, args.mu)


def _add_params(p):
    g = p.add_argument_group("distribution parameters")
    g.add_argument("--lambda", dest="lam", type=float, required=True)
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--delta", type=float, required=True)
    g.add_argument("--mu", type=float, default=0.0)


def _add_output(p, formats=("json", "csv")):
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--out", type=Path, help="write here instead of stdout")


def _add_tolerance(p):
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--abs-tol", type=float, default=None)


def _quad(args, default: QuadratureConfig) -> QuadratureConfig:
    rel = args.rel_tol if args.rel_tol is not None else default.rel_tol
    ab = args.abs_tol if args.abs_tol is not None else default.abs_tol
    return QuadratureConfig(rel, ab, default.max_subdivisions)


def _emit(args, text: str):
    if args.out is not None:
        try:
            args.out.write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _table(args, columns: dict) -> str:
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    if args.format == "csv":
        buf = io.StringIO()
        buf.write(",".join(names) + "\n")
        for i in range(n):
            buf.write(",".join(repr(float(columns[c][i])) for c in names) + "\n")
        return buf.getvalue()
    rows = [{c: float(columns[c][i]) for c in names} for i in range(n)]
    return json.dumps(rows, indent=1)


def _parse_grid(spec: str) -> np.ndarray:
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise UsageError(f"grid must look like start:stop:count (got {spec!r})") from None
    if n < 1:
        raise UsageError("grid count must be >= 1")
    return np.linspace(a, b, n)


def _read_values(path: Path) -> np.ndarray:
    try:
        s = SampleSet.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except (ValueError, KeyError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from None
    if s.values.size == 0:
        raise UsageError(f"{path} contains no values")
    if not np.all(np.isfinite(s.values)):
        raise UsageError(f"{path} contains NaN or infinite values")
    return s.values


def _points(args) -> np.ndarray:
    if args.points is not None and args.grid is not None:
        raise UsageError("give either --points or --grid, not both")
    if args.points is not None:
        p = Path(args.points)
        if p.exists():
            return _read_values(p)
        try:
            return np.array([float(v) for v in args.points.split(",") if v.strip()])
        except ValueError:
            raise UsageError(f"--points is neither a file nor a comma list: {args.points!r}") \
                from None
    if args.grid is not None:
        return _parse_grid(args.grid)
    raise UsageError("one of --points or --grid is required")


# ------------------------------------------------------------------ commands

def cmd_pdf(args) -> int:
    p = _params(args)
    x = _points(args)
    cdf = gh_cdf(p, x, _quad(args, QuadratureConfig(1e-12, 1e-14, 4000)))
    lp = np.atleast_1d(gh_log_pdf(p, x))
    _emit(args, _table(args, {"x": x, "pdf": np.exp(lp), "log_pdf": lp,
                              "cdf": np.atleast_1d(cdf)}))
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    p = _params(args)
    s = gh_sample(p, args.n, RandomStream(args.seed, args.stream_id))
    text = s.to_json() if args.format == "json" else s.to_csv()
    _emit(args, text)
    v = s.values
    summary = {"n": int(v.size), "sample_mean": float(v.mean()),
               "sample_var": float(v.var(ddof=1)) if v.size > 1 else None,
               "mean": gh_mean(p), "var": gh_variance(p)}
    print(json.dumps(summary), file=sys.stderr)
    return EXIT_OK


def cmd_stein_check(args) -> int:
    p = _params(args)
    x = _read_values(args.input)
    if x.size < 2:
        raise UsageError("need at least two values")
    centred = GHParams(p.lam, p.alpha, p.beta, p.delta, 0.0)
    report = stein_discrepancy(x - p.mu, centred, threads=args.threads or thread_count())
    d = report.to_dict()
    d["threshold"] = args.threshold
    d["pass"] = report.max_abs_z <= args.threshold
    _emit(args, json.dumps(d, indent=2))
    return EXIT_OK if d["pass"] else EXIT_FAIL


def cmd_moments(args) -> int:
    if args.K < 0:
        raise UsageError("K must be non-negative")
    p = _params(args)
    if p.mu != 0:
        raise UsageError("moments are tabulated for mu = 0")
    t = moment_table(p, max(args.K, 3))
    k = np.arange(args.K + 1)
    if args.format == "json":
        d = t.to_dict()
        d["moments"] = d["moments"][: args.K + 1]
        _emit(args, json.dumps(d, indent=1))
    else:
        buf = io.StringIO()
        buf.write("k,value,source\n")
        for i in k:
            buf.write(f"{i},{float(t[i])!r},{t.provenance[i]}\n")
        _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_limits(args) -> int:
    case = default_case(args.case)
    probes = None
    if args.probes:
        try:
            probes = [float(v) for v in args.probes.split(",")]
        except ValueError:
            raise UsageError("--probes must be a comma-separated list of numbers") from None
    rep = gh_to_limit_convergence(case, probes=probes)
    _emit(args, rep.to_json())
    ok = rep.monotone_tail() and rep.final_deviation() <= args.tolerance
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(args) -> int:
    p = _params(args)
    if p.mu != 0:
        raise UsageError("the Stein equation is solved for mu = 0")
    try:
        h = h_from_spec(args.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x = _points(args)
    sol = SteinSolution(p, h, _quad(args, QuadratureConfig(1e-13, 1e-15, 4000)))
    f, df = sol.on_grid(x)
    _emit(args, _table(args, {"x": x, "f": f, "df": df}))
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ghstein",
                                 description="GH distributions and Stein-method diagnostics")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pdf", help="density, log density and cdf on points")
    _add_params(p)
    p.add_argument("--grid", help="start:stop:count")
    p.add_argument("--points", help="file of values or comma list")
    _add_output(p)
    _add_tolerance(p)
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("sample", help="draw a reproducible sample")
    _add_params(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-id", type=int, default=0)
    _add_output(p, ("csv", "json"))
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stein-check", help="Stein discrepancy of a sample")
    _add_params(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=4.0)
    p.add_argument("--threads", type=int, default=None)
    _add_output(p, ("json",))
    p.set_defaults(func=cmd_stein_check)

    p = sub.add_parser("moments", help="moments M_0..M_K")
    _add_params(p)
    p.add_argument("--K", type=int, default=8)
    _add_output(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("limits", help="operator convergence along a limit path")
    p.add_argument("--case", choices=("VG2", "student_t", "gig"), required=True)
    p.add_argument("--probes", help="comma list of probe points")
    p.add_argument("--tolerance", type=float, default=1e-3)
    _add_output(p, ("json",))
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("solve", help="solve the Stein equation for a catalogue h")
    _add_params(p)
    p.add_argument("--h", required=True, help="const[:c], indicator:a:b, sin, arctan")
    p.add_argument("--grid", help="start:stop:count")
    p.add_argument("--points", help="file of values or comma list")
    _add_output(p)
    _add_tolerance(p)
    p.set_defaults(func=cmd_solve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

