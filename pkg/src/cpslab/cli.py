"""``cpslab`` command-line entry point.

Every subcommand reads a JSON system descriptor (``--system``: a path or the
name of a shipped descriptor), runs one library operation, and writes a JSON
report or a CSV series to ``--out`` (stdout when omitted).  Reports embed the
resolved configuration and seed and carry no timing fields, except the
``timing`` block of ``selftest``.

Exit codes: 0 success, 1 verdict-level failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .descriptors import load_system, named_systems
from .errors import CpsError

SCHEMA_HINT = """system descriptor schema:
  {"range":  {"finite": N} | {"countable": K},
   "b":      {"kind": "Exclusion" | "PartialExclusion" | "LinearZeroRange" | "ConstantZeroRange"
                      | "ZeroRange" | "InverseEvenFactorial" | "Misanthrope" | "Table",
              "params": {...}},
   "kernel": {"named": "cycle" | "asymmetric_cycle" | "line" | "counterexample", "sites": M, ...}
             | {"explicit": [[x, y, rate], ...], "sites": M},
   "lambda": {"kind": "constant" | "geometric" | "polynomial" | "explicit" | "factorial", "params": {...}}}
shipped systems: """


class UsageError(Exception):
    pass


def _ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _finite(o):
    """Strict JSON: non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(o, dict):
        return {str(k): _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (np.ndarray, np.generic)):
        return _finite(o.tolist())
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return o


def _dump_json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, default=_default, allow_nan=False) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _system(args):
    if not args.system:
        raise UsageError("--system is required")
    try:
        return load_system(args.system)
    except (KeyError, ValueError, TypeError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load system {args.system!r}: {exc}") from None


def _config(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "threads", "out", "report", "trajectory")}
    cfg.update(extra)
    return cfg


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- subcommands ----------------------------------------------------------------


def cmd_measure(args) -> int:
    from .measures import marginal, product_measure

    sysm = _system(args)
    if args.truncation is not None and not sysm.b.range.finite:
        b = sysm.b.with_truncation(args.truncation)
    else:
        b = sysm.b
    if args.lam is not None:
        law = marginal(b, args.lam)
        text = _csv(["n", "pmf"], [[int(n), repr(float(p))] for n, p in zip(law.support, law.pmf)])
    else:
        m = product_measure(b, sysm.lam())
        rows = []
        for x, law in enumerate(m.laws):
            rows += [[x, int(n), repr(float(p))] for n, p in zip(law.support, law.pmf)]
        text = _csv(["site", "n", "pmf"], rows)
    _emit(text, args.out)
    return 0


def _generator_table(sysm, lam) -> list:
    from .stationarity import generator_table, spanning_supports

    M = sysm.sites
    if M <= 5:
        supports = spanning_supports(M)
    else:
        supports = [(x,) for x in range(M)] + [(x, (x + 1) % M) for x in range(M - (0 if sysm.kernel.periodic else 1))]
    rows = []
    for A in supports:
        direct, rearranged = generator_table(A, sysm.b, lam, sysm.kernel, top=min(sysm.b.range.top, 6))
        rows.append({"support": list(A), "max_abs_direct": float(np.abs(direct).max()), "max_form_gap": float(np.abs(direct - rearranged).max())})
    return rows


def cmd_stationarity(args) -> int:
    from .measures import check_assumptions
    from .stationarity import stationarity_verdict

    sysm = _system(args)
    log_lam = sysm.log_lam()
    verdict = stationarity_verdict(sysm.b, None, sysm.kernel, log_lam=log_lam, truncation=args.truncation)
    report = {
        "config": _config(args, descriptor=sysm.descriptor),
        "assumptions": check_assumptions(sysm.b).to_dict(),
        "verdict": verdict.to_dict(),
    }
    if np.all(log_lam < 700.0):
        report["generator_test"] = _generator_table(sysm, np.exp(log_lam))
    _emit(_dump_json(report), args.report or args.out)
    return 0 if verdict.stationary else 1


def cmd_ergodicity(args) -> int:
    from .ergodicity import countable_w_criterion, finite_w_criterion

    sysm = _system(args)
    D = args.d_set or [1]
    if sysm.b.range.finite:
        verdict = finite_w_criterion(sysm.profile)
    else:
        verdict = countable_w_criterion(sysm.b, sysm.profile, D, truncation=args.truncation)
    _emit(_dump_json({"config": _config(args, descriptor=sysm.descriptor, d_set=D), "verdict": verdict.to_dict()}), args.out or args.report)
    return 0


def cmd_couple(args) -> int:
    from .coupling import coupling_times, tail_triviality_probe

    sysm = _system(args)
    if not args.starts or len(args.starts) != 2:
        raise UsageError("--starts needs two integers s0,s")
    s0, s = args.starts
    D = args.d_set or [1]
    H = args.horizon
    budget = args.tail_budget
    tv = tail_triviality_probe(sysm.b, sysm.profile, args.n0, s0, s, H, tail_budget=budget)
    T = coupling_times(sysm.b, sysm.profile, args.n0, s0, s, D, H, args.seed, args.replicas, threads=args.threads)
    met = np.sort(T[T >= 0])
    ns = np.arange(args.n0, H + 1)
    not_coupled = 1.0 - np.searchsorted(met, ns, side="right") / max(len(T), 1)
    _emit(_csv(["n", "tv", "p_not_coupled"], [[int(n), repr(float(v)), repr(float(q))] for n, v, q in zip(ns, tv, not_coupled)]), args.out)
    if args.report:
        qs = {f"q{int(q * 100):02d}": (float(np.quantile(np.where(T >= 0, T, np.inf), q))) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
        report = {
            "config": _config(args, descriptor=sysm.descriptor, d_set=D),
            "coupled_fraction": float(len(met) / max(len(T), 1)),
            "timeouts": int(np.sum(T < 0)),
            "quantiles": {k: (v if np.isfinite(v) else None) for k, v in qs.items()},
            "tv_final": float(tv[-1]),
        }
        _emit(_dump_json(report), args.report)
    return 0


def cmd_simulate(args) -> int:
    from .dynamics import gillespie_run, stationarity_mc
    from .measures import product_measure

    sysm = _system(args)
    lam = sysm.lam()
    rep = stationarity_mc(sysm.b, lam, sysm.kernel, args.t, args.replicas, args.seed, threads=args.threads)
    z = np.abs(np.asarray(rep["z"]))
    rep["max_abs_z"] = float(z.max())
    rep["config"] = _config(args, descriptor=sysm.descriptor)
    if args.trajectory:
        start = product_measure(sysm.b, lam).sample(np.random.default_rng(args.seed), 1)[0]
        traj = gillespie_run(sysm.b, sysm.kernel, start, args.t, seed=args.seed)
        traj.replay(sysm.b, sysm.kernel)
        with open(args.trajectory, "w", newline="") as fh:
            fh.write(traj.to_csv())
        rep["trajectory"] = {"path": args.trajectory, "start": list(traj.start), "end": list(traj.end), "jumps": traj.total_jumps}
    _emit(_dump_json(rep), args.out or args.report)
    return 0


def cmd_dual(args) -> int:
    from .duality import dual_fugacity, dualize

    sysm = _system(args)
    if not sysm.b.range.finite:
        raise UsageError("duality needs a finite occupancy range")
    N = sysm.b.range.top
    bd, pd = dualize(sysm.b, sysm.kernel, N)
    pi = dual_fugacity(sysm.b, sysm.lam(), N)
    descriptor = {
        "range": {"finite": N},
        "b": {"kind": "Table", "params": {"values": bd.table(N).tolist()}},
        "kernel": pd.to_dict(),
        "lambda": {"kind": "explicit", "params": {"values": pi.tolist()}},
    }
    _emit(_dump_json(descriptor), args.out)
    return 0


def cmd_counterexample(args) -> int:
    from .counterexample import joint_verdict, nontriviality_certificate, profile_concentration, ratio_bounds_check

    if args.kmax < 3:
        raise UsageError("--kmax must be at least 3")
    joint = joint_verdict(i_max=min(args.kmax, 100), k0=3, k_max=args.kmax)
    conc = profile_concentration(args.kmax)
    bounds = ratio_bounds_check(args.kmax)
    from .counterexample import build_counterexample

    s = build_counterexample(min(args.kmax, 100), args.p12)
    report = {
        "config": _config(args),
        "detailed_balance_residual": s.detailed_balance_residual,
        "joint_verdict": joint,
        "ratio_bounds": bounds,
        "concentration": {k: conc[k] for k in ("deficit_sum", "bound", "modes_ok", "mode_probability")},
        "certificate": nontriviality_certificate(3, args.kmax),
    }
    _emit(_dump_json(report), args.out or args.report)
    ok = joint["consistent"] and bounds["holds"] and conc["modes_ok"]
    return 0 if ok else 1


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(echo=lambda line: print(line, file=sys.stderr))
    report = {
        "passed": all(r.passed for r in results),
        "criteria": [r.to_dict() for r in results],
        "timing": {str(r.number): r.seconds for r in results},
    }
    if args.out or args.report:
        _emit(_dump_json(report), args.out or args.report)
    return 0 if report["passed"] else 1


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpslab", description="Product measures and ergodicity checks for conservative particle systems.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="descriptor path or shipped name (" + ", ".join(named_systems()) + ")")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--report", help="JSON report file")
    common.add_argument("--seed", type=int, default=12345)
    common.add_argument("--replicas", type=int, default=1000)
    common.add_argument("--truncation", type=int, default=None)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--tail-budget", type=float, default=1e-9)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("measure", parents=[common], help="one-site marginals as CSV")
    p.add_argument("--lambda", dest="lam", type=float, help="single fugacity instead of the system profile")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("stationarity", parents=[common], help="stationarity verdict and generator test")
    p.set_defaults(func=cmd_stationarity)

    p = sub.add_parser("ergodicity", parents=[common], help="ergodicity verdict")
    p.add_argument("--d-set", type=_ints, help="step sizes, e.g. 1,2")
    p.set_defaults(func=cmd_ergodicity)

    p = sub.add_parser("couple", parents=[common], help="TV decay and coupling times")
    p.add_argument("--starts", type=_ints, required=True, help="s0,s")
    p.add_argument("--d-set", type=_ints)
    p.add_argument("--horizon", type=int, default=10**4)
    p.add_argument("--n0", type=int, default=0)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo stationarity test")
    p.add_argument("--t", type=float, default=5.0)
    p.add_argument("--trajectory", help="also dump one trajectory as CSV (time,x,y)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dual", parents=[common], help="anti-particle dual descriptor")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("counterexample", parents=[common], help="deterministic-profile counterexample report")
    p.add_argument("--kmax", type=int, default=100)
    p.add_argument("--p12", type=float, default=0.5)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cpslab: error: {exc}\n\n{SCHEMA_HINT}{', '.join(named_systems())}", file=sys.stderr)
        return 2
    except CpsError as exc:
        print(f"cpslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


run = main

if __name__ == "__main__":
    sys.exit(main())
