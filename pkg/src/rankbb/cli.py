"""Command line front end: ``run``, ``sweep`` and ``verify``.

Exit codes: 0 ok, 1 verification failed, 2 bad configuration, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import operators as ops
from .algorithms import ALGORITHMS, DEFAULT_RESTART_CAP, ConfigError, run_algorithm
from .bench import ExperimentConfig, emit_report, run_experiment, trial_seed
from .bitstring import BitString, InstanceKind, ProblemInstance
from .consistency import ENUMERATION_CAP
from .oracle import DEFAULT_BUDGET, AccessMode, Oracle, ranking_of
from .verify import (
    check_binomial_window_bound,
    consistent_prefix_counts,
    exhaustive_ell_check,
    random_ell_check,
    prefix_bound_holds,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

VERIFY_TARGETS = ("unbiased", "ell-count", "consistent-targets", "binomial", "oracle")


def _add_common(p: argparse.ArgumentParser, multi: bool) -> None:
    p.add_argument("--algorithm", required=True, choices=sorted(ALGORITHMS))
    p.add_argument("--instance", choices=[k.value for k in InstanceKind], default=None,
                   help="instance family (default depends on the algorithm)")
    nargs = "+" if multi else None
    p.add_argument("--n", type=int, nargs=nargs, required=True)
    p.add_argument("--k", type=int, nargs=nargs, default=None)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="base seed; trial seeds are derived from it")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--restart-cap", type=int, default=DEFAULT_RESTART_CAP)
    p.add_argument("--out", default=None, help="output path stem (writes .csv/.json/_plot.csv/.png)")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-figure", action="store_true", help="skip the matplotlib figure")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankbb", description="Ranking-based black-box optimisation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("run", help="trials of one algorithm at one size"), multi=False)
    _add_common(sub.add_parser("sweep", help="trials over several n (and k) values"), multi=True)

    v = sub.add_parser("verify", help="run a brute-force verifier")
    v.add_argument("target", choices=VERIFY_TARGETS)
    v.add_argument("--n", type=int, nargs="+", default=None)
    v.add_argument("--t", type=int, default=None, help="subset size (ell-count)")
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--algorithm", choices=("rls", "monotone_linear"), default="rls")
    v.add_argument("--kappa", type=float, default=2.0)
    v.add_argument("--seed", type=int, default=0)
    return parser


def _config(args, multi: bool) -> ExperimentConfig:
    return ExperimentConfig(
        algorithm=args.algorithm,
        instance_kind=args.instance,
        n=list(args.n) if multi else args.n,
        k=(list(args.k) if multi and args.k else args.k),
        trials=args.trials,
        base_seed=args.seed,
        budget=args.budget,
        restart_cap=args.restart_cap,
        workers=args.workers,
        output_path=args.out,
    )


def _cmd_experiment(args, multi: bool) -> int:
    config = _config(args, multi)
    report = run_experiment(config)
    if args.out:
        for p in emit_report(report, args.out, args.format, figure=not args.no_figure):
            print(p)
    elif args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(report.to_json())
    errors = [r for r in report.rows if r.error]
    for r in errors[:5]:
        print(f"trial {r.trial} (n={r.n}, k={r.k}): {r.error}", file=sys.stderr)
    return EXIT_RUNTIME if errors else EXIT_OK


# -- verify ------------------------------------------------------------------

def _verify_unbiased(args) -> bool:
    ok = True
    for n in args.n or [2, 3]:
        if n > 5:
            raise ConfigError("exhaustive unbiasedness checks are limited to n <= 5")
        for op in ops.catalogue(n):
            res = ops.check_unbiased(op, n)
            print(f"{'PASS' if res else 'FAIL'} {op.name} n={n} ({res.checked} cases)")
            if not res:
                ok = False
                print(json.dumps(res.counterexample, indent=2))
        ctrl = ops.check_unbiased(ops.ALL_ZEROS, n)
        print(f"{'FAIL' if ctrl else 'PASS'} control {ops.ALL_ZEROS.name} n={n} is rejected")
        if ctrl:
            ok = False
        else:
            print(json.dumps(ctrl.counterexample))
    return ok


def _verify_ell(args) -> bool:
    n = (args.n or [10])[0]
    t = args.t or 8
    if t < 2 or t > 1 << n:
        raise ConfigError("need 2 <= t <= 2**n")
    if args.trials:
        ok, bad = random_ell_check(n, t, args.trials, np.random.default_rng(args.seed))
        scope = f"{args.trials} random subsets, t <= {t}"
    else:
        if n > 5:
            raise ConfigError("exhaustive subset enumeration needs n <= 5; pass --trials for random checks")
        ok, bad = exhaustive_ell_check(n, t)
        scope = f"every subset of size {t}"
    print(f"{'PASS' if ok else 'FAIL'} distinct ell count <= t-1, n={n}, {scope}")
    if bad:
        print("counterexample:", " ".join(map(str, bad)))
    return ok


def _verify_consistent(args) -> bool:
    n = (args.n or [12])[0]
    if n > ENUMERATION_CAP:
        raise ConfigError(f"n must be at most {ENUMERATION_CAP}")
    trials = args.trials or 100
    ok = True
    for trial in range(trials):
        rng = np.random.default_rng(trial_seed(args.seed, trial))
        oracle = Oracle(ProblemInstance.random(InstanceKind.BINARY_VALUE, n, rng), AccessMode.RANKING)
        run_algorithm(args.algorithm, oracle, rng)
        counts = consistent_prefix_counts([r.point for r in oracle.history], n, oracle.ranks())
        good, t = prefix_bound_holds(counts, n)
        if not good:
            ok = False
            print(f"FAIL trial {trial}: {counts[t - 1]} consistent targets after {t} queries < 2^{n - t + 1}")
    print(f"{'PASS' if ok else 'FAIL'} consistent targets >= 2^(n-t+1), n={n}, {args.algorithm}, {trials} transcripts")
    return ok


def _verify_binomial(args) -> bool:
    ns = args.n or [64, 256]
    lo, hi = (ns[0], ns[-1]) if len(ns) > 1 else (ns[0], ns[0])
    ok = True
    for n in range(lo, hi + 1):
        res = check_binomial_window_bound(n, args.kappa)
        if not res.passed:
            ok = False
            print(f"FAIL n={n}: violated at l={res.violating_ell}")
    print(f"{'PASS' if ok else 'FAIL'} central binomial window bound, kappa={args.kappa}, n in [{lo}, {hi}]")
    return ok


def _verify_oracle(args) -> bool:
    trials = args.trials or 1000
    rng = np.random.default_rng(args.seed)
    for trial in range(trials):
        n = int(rng.integers(1, 17))
        kind = list(InstanceKind)[int(rng.integers(0, 3))]
        oracle = Oracle(ProblemInstance.random(kind, n, rng), AccessMode.RANKING)
        for _ in range(int(rng.integers(1, 51))):
            oracle.query_g(BitString.random(n, rng))
        fs = [r.f_value for r in oracle.history]
        gs = oracle.g_values()
        same_order = all((a < b) == (c < d) and (a == b) == (c == d)
                         for a, c in zip(fs, gs) for b, d in zip(fs, gs))
        if ranking_of(gs) != ranking_of(fs) or not same_order:
            print(f"FAIL trial {trial}: f={fs} g={[str(g) for g in gs]}")
            return False
    print(f"PASS g-values are order-isomorphic to f on {trials} random query sequences")
    return True


def _cmd_verify(args) -> int:
    handler = {
        "unbiased": _verify_unbiased,
        "ell-count": _verify_ell,
        "consistent-targets": _verify_consistent,
        "binomial": _verify_binomial,
        "oracle": _verify_oracle,
    }[args.target]
    return EXIT_OK if handler(args) else EXIT_VERIFY


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_experiment(args, multi=args.command == "sweep")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
