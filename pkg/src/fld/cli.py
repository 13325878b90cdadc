"""``fld`` command line: simulation, offline optimum, LP export/solve/verify, sweeps.

Every subcommand exits with status 1 when a checked invariant fails and 2 on
bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .engine import (
    AlgoParams,
    EngineError,
    SensibilityParams,
    check_cost_identity,
    check_sensibility,
    run_two_sided,
    trace_to_jsonl,
)
from .frlp import LP1, LP2, FactorLP, write_lp, write_mps
from .harness import (
    SweepSpec,
    figure_data,
    minima_csv,
    ratio_campaign,
    sweep,
    write_figure_csv,
    write_sweep_csv,
)
from .instance import (
    GEOMETRIES,
    ONE_SIDED,
    TWO_SIDED,
    InstanceError,
    dumps_instance,
    format_rational,
    gen_random,
    load_instance,
    save_instance,
)
from .lpsolve import (
    DEFAULT_TOL,
    SolverError,
    Unbounded,
    export_certificate,
    import_certificate,
    solve,
    verify_certificate,
)
from .onesided import ReductionError, report_csv, run_one_sided
from .oracle import OracleError, opt_bruteforce

OK, VIOLATION, BAD_INPUT = 0, 1, 2


def _rational(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from None


def _int_list(s: str) -> list[int]:
    try:
        return [int(v) for v in s.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _load(args):
    if args.instance is not None:
        return load_instance(args.instance)
    if args.random is None:
        raise InstanceError("give an instance file or --random CLIENTS,SITES")
    n_clients, n_sites = args.random
    return gen_random(args.seed, n_clients, n_sites, geometry=args.geometry)


def _add_instance_args(p):
    p.add_argument("instance", nargs="?", help="instance file (flil format)")
    p.add_argument("--random", type=_int_list, metavar="CLIENTS,SITES",
                   help="use a seeded random instance instead of a file")
    p.add_argument("--geometry", choices=GEOMETRIES, default="uniform-square")


def _emit(text: str, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_gen(args) -> int:
    inst = gen_random(args.seed, args.clients, args.sites, geometry=args.geometry,
                      time_horizon=args.horizon)
    if args.output:
        save_instance(inst, args.output)
    else:
        sys.stdout.write(dumps_instance(inst))
    return OK


def cmd_simulate(args) -> int:
    inst = _load(args)
    try:
        trace = run_two_sided(inst, AlgoParams(args.gamma), audit=args.audit)
    except EngineError as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return VIOLATION
    rep = check_cost_identity(trace)
    status = OK if rep.ok else VIOLATION
    cb = trace.solution.cost
    out = {
        "gamma": format_rational(trace.params.gamma),
        "openings": len(trace.openings),
        "sum_alpha": format_rational(rep.sum_alpha),
        "cost": {k: format_rational(v) for k, v in cb.as_dict().items()},
        "identity_ok": rep.ok,
    }
    if args.lam is not None:
        sens = SensibilityParams(args.lam, args.xi)
        bad = check_sensibility(trace, sens)
        out["sensibility_violations"] = len(bad)
        if bad:
            status = VIOLATION
    if args.trace:
        Path(args.trace).write_text(trace_to_jsonl(trace), encoding="utf-8")
    for v in rep.violations:
        print(f"identity violation: {v}", file=sys.stderr)
    print(json.dumps(out, indent=2))
    return status


def cmd_opt(args) -> int:
    inst = _load(args)
    variant = ONE_SIDED if args.variant == "one" else TWO_SIDED
    sol, cost = opt_bruteforce(inst, variant, limit=args.limit)
    out = {
        "variant": variant,
        "cost": format_rational(cost),
        "cost_float": float(cost),
        "openings": [{"site": o.site, "time": format_rational(o.time)} for o in sol.openings],
        "connections": [{"client": c.client, "opening": c.opening, "time": format_rational(c.time)}
                        for c in sol.connections],
    }
    print(json.dumps(out, indent=2))
    return OK


def cmd_one_sided(args) -> int:
    inst = _load(args)
    sol, report, trace = run_one_sided(inst, AlgoParams(args.gamma), SensibilityParams(args.lam, args.xi))
    _emit(report_csv(report), args.output)
    two = trace.solution.cost.total
    print(f"two-sided cost {float(two):.10g}, one-sided cost {float(sol.cost.total):.10g}, "
          f"{len(sol.openings)} openings", file=sys.stderr)
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return OK if report.ok and sol.cost.total >= two else VIOLATION


def cmd_ratio(args) -> int:
    summ = ratio_campaign(args.seed, args.count, args.n_max, AlgoParams(args.gamma),
                          worst_path=args.worst, jobs=args.jobs)
    print(json.dumps(summ.as_dict(), indent=2))
    if args.bound is not None and summ.max_ratio is not None and summ.max_ratio > args.bound:
        print(f"max ratio {float(summ.max_ratio):.10g} exceeds bound {float(args.bound)}", file=sys.stderr)
        return VIOLATION
    return OK


def cmd_sweep(args) -> int:
    spec = SweepSpec(
        kinds=tuple(args.kinds.split(",")),
        ks=tuple(args.ks),
        gamma_start=args.gamma_start,
        gamma_stop=args.gamma_stop,
        gamma_step=args.gamma_step,
        mode=args.mode,
        method=args.method,
        tol=args.tol,
        gamma_values=tuple(args.gammas) if args.gammas else None,
    )
    res = sweep(spec, jobs=args.jobs)
    _emit(write_sweep_csv(res), args.output)
    if args.minima:
        minima_csv(res, args.minima)
    else:
        sys.stderr.write(minima_csv(res))
    if args.figure:
        write_figure_csv(figure_data([res], tol=args.line_tol), args.figure)
    failed = [r for r in res.rows if r.status in ("failed", "unverified")]
    for r in failed:
        print(f"{r.kind} k={r.k} gamma={r.gamma}: {r.status} {r.message}", file=sys.stderr)
    for v in res.violations:
        print(f"invariant violation: {v}", file=sys.stderr)
    return VIOLATION if failed or res.violations else OK


def cmd_figure(args) -> int:
    _emit(write_figure_csv(figure_data(args.inputs, tol=args.line_tol)), args.output)
    return OK


def _lp(args) -> FactorLP:
    return FactorLP(args.kind, args.k, args.gamma)


def cmd_lp_export(args) -> int:
    lp = _lp(args)
    digest = (write_mps if args.format == "mps" else write_lp)(lp, args.output)
    print(f"{digest}  {args.output}")
    return OK


def cmd_lp_solve(args) -> int:
    lp = _lp(args)
    res = solve(lp, mode=args.mode, method=args.method, tol=args.tol)
    if isinstance(res, Unbounded):
        names = lp.var_names
        ray = {names[j]: float(v) for j, v in enumerate(res.ray) if v}
        print(json.dumps({"lp": repr(lp), "status": "unbounded", "method": res.method, "ray": ray}, indent=2))
        return OK
    rep = verify_certificate(lp, res)
    out = {
        "lp": repr(lp),
        "status": res.status,
        "objective": float(res.primal_obj),
        "objective_exact": str(res.primal_obj) if isinstance(res.primal_obj, Fraction) else None,
        "method": res.method,
        "iterations": res.iterations,
        "verification": rep.summary(),
        "notes": res.notes,
    }
    if args.primal or args.dual:
        if not (args.primal and args.dual):
            raise ValueError("--primal and --dual must be given together")
        export_certificate(res, args.primal, args.dual)
    print(json.dumps(out, indent=2))
    return OK if rep.passed and not res.notes else VIOLATION


def cmd_lp_verify(args) -> int:
    lp = _lp(args)
    cert = import_certificate(lp, args.primal, args.dual, tol=args.tol)
    rep = verify_certificate(lp, cert, tol=cert.tolerance)
    print(rep.summary())
    for m in rep.messages:
        print(f"  {m}")
    return OK if rep.passed else VIOLATION


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fld", description="Online facility location with delay: "
                                "simulation, offline optimum and factor-revealing LPs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="write a seeded random instance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--clients", type=int, required=True)
    s.add_argument("--sites", type=int, required=True)
    s.add_argument("--geometry", choices=GEOMETRIES, default="uniform-square")
    s.add_argument("--horizon", type=_rational, default=Fraction(2))
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("simulate", help="run the two-sided algorithm and check the cost identity")
    _add_instance_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=_rational, default=Fraction(717, 250))
    s.add_argument("--audit", action="store_true", help="re-check the no-missed-event invariants per event")
    s.add_argument("--trace", help="write the event log as JSON lines")
    s.add_argument("--lambda", dest="lam", type=_rational, help="also check (lambda, xi)-sensibility")
    s.add_argument("--xi", type=_rational, default=Fraction(2))
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("opt", help="exact offline optimum by partition enumeration")
    _add_instance_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--variant", choices=("one", "two"), default="two")
    s.add_argument("--limit", type=int, default=9, help="largest client count to enumerate")
    s.set_defaults(func=cmd_opt)

    s = sub.add_parser("one-sided", help="run the one-sided reduction; CSV row per facility")
    _add_instance_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=_rational, default=Fraction(2))
    s.add_argument("--lambda", dest="lam", type=_rational, default=Fraction(3, 2))
    s.add_argument("--xi", type=_rational, default=Fraction(2))
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_one_sided)

    s = sub.add_parser("ratio", help="empirical ratio campaign against the offline optimum")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--n-max", type=int, default=8)
    s.add_argument("--gamma", type=_rational, default=Fraction(717, 250))
    s.add_argument("--bound", type=_rational, help="fail if any ratio exceeds this value")
    s.add_argument("--worst", help="save the worst instance here")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_ratio)

    s = sub.add_parser("sweep", help="solve factor LPs over a (kind, k, gamma) grid")
    s.add_argument("--kinds", default=f"{LP1},{LP2}")
    s.add_argument("--ks", type=_int_list, default=[2, 5, 10, 25, 50, 100])
    s.add_argument("--gamma-start", type=_rational, default=Fraction(6, 5))
    s.add_argument("--gamma-stop", type=_rational, default=Fraction(4))
    s.add_argument("--gamma-step", type=_rational, default=Fraction(1, 50))
    s.add_argument("--gammas", type=lambda v: [_rational(x) for x in v.split(",") if x],
                   help="explicit comma-separated gamma values (overrides the grid)")
    s.add_argument("--mode", choices=("float", "exact"), default="float")
    s.add_argument("--method", choices=("auto", "simplex", "highs"), default="auto")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("-o", "--output", help="sweep CSV (default stdout)")
    s.add_argument("--minima", help="per-curve argmin CSV (default stderr)")
    s.add_argument("--figure", help="also write long-format figure data here")
    s.add_argument("--line-tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("figure", help="merge sweep CSVs into long-format figure data")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--line-tol", type=float, default=1e-6)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_figure)

    lp = sub.add_parser("lp", help="factor-revealing LP tools")
    lsub = lp.add_subparsers(dest="lp_command", required=True)

    def lp_common(q):
        q.add_argument("--kind", choices=(LP1, LP2), required=True)
        q.add_argument("--k", type=int, required=True)
        q.add_argument("--gamma", type=_rational, required=True)

    q = lsub.add_parser("export", help="write the LP in CPLEX LP or MPS format; prints SHA-256")
    lp_common(q)
    q.add_argument("--format", choices=("lp", "mps"), default="lp")
    q.add_argument("-o", "--output", required=True)
    q.set_defaults(func=cmd_lp_export)

    q = lsub.add_parser("solve", help="solve and verify; optionally write certificate files")
    lp_common(q)
    q.add_argument("--mode", choices=("float", "exact"), default="float")
    q.add_argument("--method", choices=("auto", "simplex", "highs"), default="auto")
    q.add_argument("--tol", type=float, default=DEFAULT_TOL)
    q.add_argument("--primal")
    q.add_argument("--dual")
    q.set_defaults(func=cmd_lp_solve)

    q = lsub.add_parser("verify", help="verify externally supplied certificate files")
    lp_common(q)
    q.add_argument("--primal", required=True)
    q.add_argument("--dual", required=True)
    q.add_argument("--tol", type=float, default=DEFAULT_TOL)
    q.set_defaults(func=cmd_lp_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ReductionError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VIOLATION
    except (InstanceError, OracleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
