"""Command-line interface: ``orthobound {bounds,table1,verify,export,solve-sdpa,chromatic}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from . import __version__, sdpa
from .classical import (
    chromatic_lower_bound, corollary_identity_check, integer_refinement, lower_bound_set,
    prop1_witness,
)
from .report import (
    METHODS, UPPER_METHODS, BoundReport, Cache, ChainViolation, check_chain, compute_cached,
    config_hash, is_omega,
)
from .scheme import build_scheme
from .solver import SolverConfig, solve
from .terwilliger import (
    MAX_ORACLE_N, bordered_oracle, build_laurent_sdp, build_schrijver_sdp,
    expand_orbit_assignment, psd_equivalence_oracle, triple_orbits,
)

log = logging.getLogger("orthobound")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_CHAIN = 0, 1, 2, 3
TABLE1_NS = (16, 20, 24, 28, 32)
LARGE_N = (28, 32)


class UsageError(Exception):
    pass


def parse_forbidden(text: str) -> list[int]:
    """``"8"``, ``"1..5"`` or comma-separated mixtures such as ``"1..3,7"``."""
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = part.split("..", 1)
                out.update(range(int(lo), int(hi) + 1))
            else:
                out.add(int(part))
        except ValueError:
            raise UsageError(f"cannot parse forbidden set {text!r}") from None
    return sorted(out)


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            tolerance=args.tol, max_iterations=args.max_iter, precision=args.precision,
            time_limit=getattr(args, "budget", None),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt_value(rep: BoundReport) -> str:
    if rep.value is None:
        return "skipped"
    if rep.method in ("lower",) or rep.status == "exact" and rep.method != "ratio":
        return f"{int(rep.value):,}"
    return f"{rep.value:,.2f}"


def _emit_reports(reports, fmt, out):
    if fmt == "jsonl":
        for r in reports:
            out.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    elif fmt == "csv":
        w = csv.writer(out)
        w.writerow(["n", "method", "forbidden", "value", "integer_refinement", "status",
                    "iterations", "wall_time"])
        for r in reports:
            w.writerow([r.n, r.method, " ".join(map(str, r.forbidden)),
                        "" if r.value is None else repr(r.value), r.integer_refinement,
                        r.status, r.iterations, f"{r.wall_time:.3f}"])
    else:
        rows = [("n", "method", "forbidden", "value", "refined", "status", "iter", "time")]
        for r in reports:
            rows.append((str(r.n), r.method, ",".join(map(str, r.forbidden)), _fmt_value(r),
                         "" if r.integer_refinement is None else f"{r.integer_refinement:,}",
                         r.status, str(r.iterations), f"{r.wall_time:.2f}s"))
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        for row in rows:
            out.write("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _chain_summary(n, reports, out):
    by = {r.method: r for r in reports if r.solved}
    uppers = [by[m] for m in UPPER_METHODS if m in by]
    if not uppers:
        return
    best = min(uppers, key=lambda r: r.integer_refinement)
    lower = by.get("lower")
    lo = f"{int(lower.value)}" if lower else "?"
    out.write(f"chain: {lo} <= alpha(Omega({n})) <= {best.integer_refinement}"
              f"  (from {best.method})\n")
    if lower and best.integer_refinement >= lower.value:
        cands = list(range(int(lower.value), best.integer_refinement + 1, 4))
        if 1 < len(cands) <= 16:
            out.write("admissible values: {" + ", ".join(map(str, cands)) + "}\n")
    out.write(f"chi(Omega({n})) >= {chromatic_lower_bound(2**n, best.integer_refinement)}\n")


def cmd_bounds(args, out) -> int:
    n = args.n
    if n < 1:
        raise UsageError("--n must be positive")
    if args.forbidden and args.min_distance:
        raise UsageError("--forbidden and --min-distance are exclusive")
    forbidden = parse_forbidden(args.forbidden) if args.forbidden else None
    if args.min_distance:
        if not 2 <= args.min_distance <= n + 1:
            raise UsageError(f"--min-distance must lie in 2..{n + 1}")
        forbidden = list(range(1, args.min_distance))
    if forbidden is None:
        if n % 4:
            raise UsageError("Omega(n) needs n divisible by 4; pass --forbidden for code bounds")
        forbidden = [n // 2]
    if any(d < 1 or d > n for d in forbidden):
        raise UsageError(f"forbidden distances must lie in 1..{n}")
    omega = is_omega(n, forbidden)
    methods = list(METHODS) if args.method == "all" else [args.method]
    if not omega:
        if args.method == "all":
            methods = ["delsarte", "schrijver", "laurent"]
        elif args.method in ("lower", "ratio"):
            raise UsageError(f"method {args.method!r} applies to Omega(n) only")
    config = _config(args)
    cache = None if args.no_cache else Cache.from_env()
    reports = []
    for m in methods:
        try:
            reports.append(compute_cached(n, m, forbidden, config, cache))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if omega:
        check_chain(reports)
    _emit_reports(reports, args.format, out)
    if omega and args.format == "table" and len(reports) > 1:
        _chain_summary(n, reports, out)
    return EXIT_OK if all(r.solved for r in reports) else EXIT_NONCONVERGED


def _skipped(n, method, config):
    return BoundReport(n=n, method=method, forbidden=[n // 2], value=None,
                       integer_refinement=None, status="skipped",
                       config_hash=config_hash(method, config))


def cmd_table1(args, out) -> int:
    if args.max_n not in TABLE1_NS:
        raise UsageError(f"--max-n must be one of {TABLE1_NS}")
    config = _config(args)
    cache = None if args.no_cache else Cache.from_env()
    rows = []
    failed = False
    for n in (m for m in TABLE1_NS if m <= args.max_n):
        cells = {}
        for method in ("lower", "laurent", "schrijver", "ratio"):
            if method in ("laurent", "schrijver") and n in LARGE_N and not args.include_large:
                cells[method] = _skipped(n, method, config)
                continue
            rep = compute_cached(n, method, None, config, cache)
            if rep.residuals.get("time_limit_hit"):
                rep.status = "skipped"
                rep.value = rep.integer_refinement = None
            elif not rep.solved:
                failed = True
            cells[method] = rep
        check_chain(list(cells.values()))
        rows.append((n, cells))
    fh = open(args.out, "w", encoding="utf-8") if args.out else out
    try:
        _emit_table1(rows, args.format, fh)
    finally:
        if args.out:
            fh.close()
    return EXIT_NONCONVERGED if failed else EXIT_OK


def _emit_table1(rows, fmt, out):
    if fmt == "jsonl":
        for _, cells in rows:
            for rep in cells.values():
                out.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
        return

    def cell(rep, method):
        if rep.value is None:
            return "skipped"
        if method == "ratio":
            return f"{math.floor(rep.value + 1e-9):,}"
        if method == "lower":
            return f"{int(rep.value):,}"
        return f"{rep.value:,.2f}"

    header = ("n", "lower", "l_+(n)", "schrijver", "floor(2^n/n)")
    body = [(str(n),) + tuple(cell(cells[m], m) for m in ("lower", "laurent", "schrijver", "ratio"))
            for n, cells in rows]
    if fmt == "csv":
        w = csv.writer(out)
        w.writerow(header)
        for n, cells in rows:
            w.writerow([n] + ["" if cells[m].value is None else repr(cells[m].value)
                              for m in ("lower", "laurent", "schrijver", "ratio")])
        return
    table = [header] + body
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


# --------------------------------------------------------------------------
# oracles


def _random_assignments(n, samples, rng):
    """Symmetric assignments; about half are shifted towards the PSD cone."""
    orbits = triple_orbits(n)
    out = []
    for s in range(samples):
        vals = {o.representative: float(rng.random()) for o in orbits}
        a = expand_orbit_assignment(n, vals)
        if s % 2:
            shift = float(rng.uniform(0.0, 2.0 * n))
            for i in range(n + 1):
                a[(i, i, i)] = a.get((i, i, i), 0.0) + shift
        out.append(a)
    return out


def _oracle_blockdiag(n, samples, seed, tol):
    rng = np.random.default_rng(seed)
    worst, agree = 0.0, True
    for a in _random_assignments(n, samples, rng):
        for fam in ("x", "y"):
            rep = psd_equivalence_oracle(n, a, fam, tol)
            worst = max(worst, rep["max_discrepancy"])
            agree &= rep["psd_agree"]
    return {"passed": worst <= tol and agree, "max_discrepancy": worst, "psd_agree": agree,
            "samples": samples}


def _oracle_border(n, samples, seed, tol):
    rng = np.random.default_rng(seed)
    worst, agree = 0.0, True
    for a in _random_assignments(n, samples, rng):
        rep = bordered_oracle(n, a, tol)
        worst = max(worst, rep["max_discrepancy"])
        agree &= rep["psd_agree"]
    return {"passed": worst <= tol and agree, "max_discrepancy": worst, "psd_agree": agree,
            "samples": samples}


def _oracle_stableset(n):
    cert = lower_bound_set(n)
    return {"passed": bool(cert.verified), "size": cert.size, "pairs_checked": cert.pairs_checked}


def _oracle_prop1(n):
    _, rep = prop1_witness(build_scheme(n), n // 2)
    return {"passed": rep.holds and rep.objective == rep.ratio,
            "hypothesis": rep.hypothesis, "feasible": rep.feasible,
            "witness_objective": str(rep.objective), "ratio_bound": str(rep.ratio),
            "tau": rep.tau, "ell": rep.ell}


def _oracle_corollary(n):
    rows = []
    ok = True
    for i in range(n + 1):
        lhs, rhs, holds = corollary_identity_check(n, i)
        ok &= holds
        rows.append({"i": i, "lhs": str(lhs), "rhs": str(rhs), "holds": holds})
    return {"passed": ok, "rows": rows}


ORACLES = ("blockdiag", "border", "stableset", "prop1", "corollary")


def cmd_verify(args, out) -> int:
    n = args.n
    names = ORACLES if args.oracle == "all" else (args.oracle,)
    results = {}
    for name in names:
        if name in ("blockdiag", "border"):
            if not 1 <= n <= MAX_ORACLE_N:
                raise UsageError(f"{name} oracle needs 1 <= n <= {MAX_ORACLE_N}")
            fn = _oracle_blockdiag if name == "blockdiag" else _oracle_border
            results[name] = fn(n, args.samples, args.seed, args.tol)
        else:
            if n < 4 or n % 4:
                raise UsageError(f"{name} oracle needs n divisible by 4")
            if name == "stableset":
                if n > 20:
                    raise UsageError("stableset oracle limited to n <= 20")
                results[name] = _oracle_stableset(n)
            elif name == "prop1":
                if n > 64:
                    raise UsageError("prop1 oracle limited to n <= 64")
                results[name] = _oracle_prop1(n)
            else:
                results[name] = _oracle_corollary(n)
    passed = all(r["passed"] for r in results.values())
    out.write(json.dumps({"n": n, "passed": passed, "oracles": results}, indent=2) + "\n")
    return EXIT_OK if passed else EXIT_NONCONVERGED


def cmd_export(args, out) -> int:
    forbidden = parse_forbidden(args.forbidden) if args.forbidden else None
    if forbidden is None and args.n % 2:
        raise UsageError("default forbidden set {n/2} needs even n")
    build = build_schrijver_sdp if args.flavor == "schrijver" else build_laurent_sdp
    try:
        problem = build(args.n, forbidden)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out in (None, "-"):
        out.write(sdpa.dumps(problem))
    else:
        sdpa.write(problem, args.out)
    return EXIT_OK


def cmd_solve_sdpa(args, out) -> int:
    problem = sdpa.read(args.path)
    sol = solve(problem, _config(args))
    out.write(json.dumps({
        "status": sol.status, "objective": sol.objective, "dual_objective": sol.dual_objective,
        "iterations": sol.iterations, "wall_time": sol.wall_time, "meta": problem.meta,
    }, sort_keys=True) + "\n")
    return EXIT_OK if sol.status in ("optimal", "near_optimal") else EXIT_NONCONVERGED


def cmd_chromatic(args, out) -> int:
    if args.alpha_upper < 1:
        raise UsageError("--alpha-upper must be >= 1")
    out.write(f"chi(Omega({args.n})) >= {chromatic_lower_bound(2**args.n, args.alpha_upper)}\n")
    return EXIT_OK


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-8, help="relative duality-gap target")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--precision", choices=("double", "extended"), default="double")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orthobound", description=__doc__)
    parser.add_argument("--version", action="version", version=f"orthobound {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="compute bounds on alpha(Omega(n)) or on code sizes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p.add_argument("--forbidden", help="forbidden distances, e.g. 8 or 1..5 (default n/2)")
    p.add_argument("--min-distance", type=int, help="code mode: forbid distances 1..d-1")
    p.add_argument("--format", choices=("table", "jsonl", "csv"), default="table")
    p.add_argument("--no-cache", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("table1", help="reproduce the table of bounds for n = 16..32")
    p.add_argument("--max-n", type=int, default=24)
    p.add_argument("--format", choices=("table", "jsonl", "csv"), default="table")
    p.add_argument("--out")
    p.add_argument("--budget", type=float, default=1800.0, help="seconds per SDP cell")
    p.add_argument("--include-large", action="store_true", help="also solve the n = 28, 32 SDPs")
    p.add_argument("--no-cache", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify", help="run consistency oracles")
    p.add_argument("--oracle", choices=ORACLES + ("all",), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write the reduced SDP in SDPA sparse format")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--flavor", choices=("schrijver", "laurent"), default="schrijver")
    p.add_argument("--forbidden")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("solve-sdpa", help="solve a problem stored in SDPA sparse format")
    p.add_argument("path")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve_sdpa)

    p = sub.add_parser("chromatic", help="chromatic number bound from an alpha upper bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha-upper", type=int, required=True)
    p.set_defaults(func=cmd_chromatic)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"orthobound: error: {exc}\n")
        return EXIT_USAGE
    except ChainViolation as exc:
        sys.stderr.write(f"orthobound: chain violation: {exc}\n")
        return EXIT_CHAIN
    except OSError as exc:
        sys.stderr.write(f"orthobound: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
