"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
CSV output uses LF line endings; bound cells are rendered with six decimals
and inapplicable cells with a marker such as ``NA(s_nk)``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from .core import RunsPattern, TrialParams
from .distributions import (
    moments_recursive,
    pmf_closed_row,
    pmf_recursive,
    waiting_moments,
    waiting_pmf,
)
from .embedding import build_chain, pmf_embedding
from .oracle import brute_force_pmf, monte_carlo_pmf
from .presets import PRESETS
from .stein import BOUNDS, BoundReport
from .verify import FAULTS, run_suite

SCHEMA_VERSION = 1
DEFAULT_SEED = 20240101
FAMILIES = ("poisson", "pseudo-binomial", "negative-binomial")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# rendering


def render_number(x) -> str:
    """Exact values as ``num/den``; doubles with 12 significant digits."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def render_bound(report: BoundReport) -> str:
    if report.applicable:
        return f"{report.bound:.6f}"
    return report.marker


def emit(rows: list[dict], columns: list[str], config: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump({"schema": SCHEMA_VERSION, "config": config, "rows": rows}, out, indent=2)
        out.write("\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return "; ".join(str(x) for x in v)
    if isinstance(v, dict):
        return "; ".join(f"{k}={_csv_cell(x)}" for k, x in v.items())
    if isinstance(v, float):
        return render_number(v)
    return str(v)


# ---------------------------------------------------------------------------
# argument handling


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    vals = [x.strip() for x in text.split(",") if x.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _params(args, value: str) -> TrialParams:
    exact = args.mode == "exact"
    try:
        num = Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a rational probability: {value!r}") from exc
    raw = num if exact else float(num)
    try:
        if args.p is not None:
            return TrialParams.from_p(raw, exact=exact)
        return TrialParams.from_q(raw, exact=exact)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _prob_values(args) -> list[str]:
    if (args.p is None) == (args.q is None):
        raise UsageError("give exactly one of --p and --q")
    return args.p if args.p is not None else args.q


def _pattern(args) -> RunsPattern:
    try:
        return RunsPattern(args.k1, args.k2)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _check_n(ns: list[int]) -> None:
    if not ns:
        raise UsageError("--n must not be empty")
    for n in ns:
        if n < 0:
            raise UsageError(f"n must be >= 0, got {n}")


def _config(args) -> dict:
    skip = {"func", "output"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _add_common(sp, with_n=True, n_list=False):
    sp.add_argument("--k1", type=int, required=True, help="failure-run length")
    sp.add_argument("--k2", type=int, required=True, help="success-run length")
    if with_n:
        if n_list:
            sp.add_argument("--n", type=_int_list, required=True, help="trial count(s), comma separated")
        else:
            sp.add_argument("--n", type=int, required=True, help="number of trials")
    sp.add_argument("--p", type=_str_list, help="success probability (comma list allowed for bounds)")
    sp.add_argument("--q", type=_str_list, help="failure probability (comma list allowed for bounds)")
    _add_output(sp)


def _add_output(sp):
    sp.add_argument("--mode", choices=("exact", "double"), default="double")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--output", help="write here instead of standard output")


# ---------------------------------------------------------------------------
# commands


def cmd_pmf(args):
    pattern = _pattern(args)
    _check_n([args.n])
    vals = _prob_values(args)
    if len(vals) != 1:
        raise UsageError("pmf takes a single probability")
    params = _params(args, vals[0])
    route = args.route
    stderr = None
    if route == "recursive":
        pmf = pmf_recursive(args.n, params, pattern)[args.n]
    elif route == "embedding":
        pmf = pmf_embedding(build_chain(params, pattern), args.n)
    elif route == "closed":
        pmf = pmf_closed_row(args.n, params, pattern)
    elif route == "brute-force":
        try:
            pmf = brute_force_pmf(args.n, params, pattern).pmf
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        est = monte_carlo_pmf(args.n, args.trials, args.seed, params, pattern)
        pmf, stderr = est.pmf_estimate, est.stderr
    rows = []
    for m, x in enumerate(pmf.probs):
        row = {"n": args.n, "m": m, "probability": render_number(x)}
        if stderr is not None:
            row["stderr"] = render_number(stderr[m])
        rows.append(row)
    cols = ["n", "m", "probability"] + (["stderr"] if stderr is not None else [])
    return rows, cols


def cmd_moments(args):
    pattern = _pattern(args)
    _check_n([args.n])
    if args.j_max < 1:
        raise UsageError("--j-max must be >= 1")
    vals = _prob_values(args)
    params = _params(args, vals[0])
    mu = moments_recursive(args.n, args.j_max, params, pattern)
    rows = [{"n": args.n, "j": j, "moment": render_number(mu[args.n][j])}
            for j in range(1, args.j_max + 1)]
    return rows, ["n", "j", "moment"]


def cmd_waiting(args):
    pattern = _pattern(args)
    if args.r < 1:
        raise UsageError("--r must be >= 1")
    vals = _prob_values(args)
    params = _params(args, vals[0])
    if args.moments:
        mu = waiting_moments(args.r, args.moments, params, pattern)
        rows = [{"r": args.r, "j": j, "moment": render_number(mu[args.r][j])}
                for j in range(1, args.moments + 1)]
        return rows, ["r", "j", "moment"]
    m_max = args.m_max if args.m_max is not None else args.r * pattern.k + 20
    if m_max < 0:
        raise UsageError("--m-max must be >= 0")
    f = waiting_pmf(args.r, m_max, params, pattern)
    rows = [{"r": args.r, "m": m, "probability": render_number(x)}
            for m, x in enumerate(f.probs) if m > args.r * pattern.k]
    return rows, ["r", "m", "probability"]


BOUND_COLUMNS = ["family", "parameters", "k1", "k2", "n", "p", "q", "bound", "matched", "notes"]


def _bound_row(rep: BoundReport, q_label=None) -> dict:
    row = rep.to_dict()
    row["bound_cell"] = render_bound(rep)
    if q_label is not None:
        row["q_label"] = q_label
    return row


def _csv_bound_row(row: dict) -> dict:
    out = dict(row)
    out["bound"] = row["bound_cell"]
    if "q_label" in row:
        out["q"] = row["q_label"]
    return out


def cmd_bounds(args):
    pattern = _pattern(args)
    _check_n(args.n)
    vals = _prob_values(args)
    nparams = 2 if args.two else 1
    fn = BOUNDS[(args.family, nparams)]
    kwargs = {}
    if nparams == 1 and args.family != "poisson":
        if args.alpha is not None and args.p_fixed is not None:
            raise UsageError("give at most one of --alpha and --p-fixed")
        kwargs = {"alpha": args.alpha, "p_fixed": args.p_fixed}
    elif args.alpha is not None or args.p_fixed is not None:
        raise UsageError("--alpha/--p-fixed apply to one-parameter pseudo-binomial or negative binomial only")
    if (args.family, nparams) == ("pseudo-binomial", 2):
        kwargs = {"floor_alpha": not args.raw_alpha}
    if (args.family, nparams) == ("negative-binomial", 2):
        kwargs = {"assume_c7": args.assume_c7}
    rows = []
    for n in args.n:
        for v in vals:
            params = _params(args, v)
            try:
                rep = fn(n, params, pattern, **kwargs)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            rows.append(_bound_row(rep))
    return rows, BOUND_COLUMNS


def cmd_table(args):
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}")
    cells = PRESETS[args.preset](assume_c7=args.assume_c7)
    rows = [_bound_row(c.report, q_label=c.q) for c in cells]
    return rows, BOUND_COLUMNS


def cmd_verify(args):
    results = run_suite(fault=args.inject_fault, waiting_only=args.waiting)
    rows = [{"check": r.name, "status": "pass" if r.ok else "FAIL", "detail": r.detail}
            for r in results]
    return rows, ["check", "status", "detail"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="runsapprox",
                                 description="Exact law and approximation bounds for (k1,k2)-runs counts.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pmf", help="PMF of the count after n trials")
    _add_common(sp)
    sp.add_argument("--route", default="recursive",
                    choices=("recursive", "embedding", "closed", "brute-force", "monte-carlo"))
    sp.add_argument("--trials", type=int, default=100_000, help="Monte Carlo sample size")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Monte Carlo seed")
    sp.set_defaults(func=cmd_pmf)

    sp = sub.add_parser("moments", help="raw moments of the count")
    _add_common(sp)
    sp.add_argument("--j-max", type=int, default=2)
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("waiting", help="waiting time until the r-th occurrence")
    _add_common(sp, with_n=False)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--m-max", type=int, help="last trial index to tabulate")
    sp.add_argument("--moments", type=int, metavar="J", help="emit moments 1..J instead of the PMF")
    sp.set_defaults(func=cmd_waiting)

    sp = sub.add_parser("bounds", help="total-variation bounds for one or more cells")
    _add_common(sp, n_list=True)
    sp.add_argument("--family", choices=FAMILIES, required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--one", action="store_true", help="one-parameter matching (default)")
    g.add_argument("--two", action="store_true", help="two-parameter matching")
    sp.add_argument("--alpha", type=float, help="fix alpha in one-parameter matching")
    sp.add_argument("--p-fixed", type=float, help="fix p in one-parameter matching")
    sp.add_argument("--raw-alpha", action="store_true",
                    help="two-parameter pseudo-binomial: use the unfloored alpha in the denominator")
    sp.add_argument("--assume-c7", action="store_true",
                    help="two-parameter negative binomial: substitute c6 for the undefined c7")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("table", help="evaluate a named grid of bounds")
    sp.add_argument("--preset", default="paper-table-1", choices=sorted(PRESETS))
    sp.add_argument("--assume-c7", action="store_true")
    _add_output(sp)
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("verify", help="run the self-check suite")
    sp.add_argument("--waiting", action="store_true", help="only the waiting-time checks")
    sp.add_argument("--inject-fault", choices=FAULTS, help="corrupt a route to test the suite")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows, cols = args.func(args)
    except UsageError as exc:
        print(f"runsapprox: error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format
    buf = io.StringIO()
    if fmt == "csv" and cols is BOUND_COLUMNS:
        emit([_csv_bound_row(r) for r in rows], cols, _config(args), fmt, buf)
    else:
        emit(rows, cols, _config(args), fmt, buf)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.command == "verify":
        failed = [r for r in rows if r["status"] != "pass"]
        if failed:
            print(f"runsapprox: verification failed: {failed[0]['check']}: {failed[0]['detail']}",
                  file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
