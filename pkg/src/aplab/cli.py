"""Command-line entry point: ``aplab <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .almost_period import almost_period_set
from .bohr import ap_in_bohr, make_bohr, read_descriptor, write_descriptor
from .cyclic import GroupFunction, SetOnZN, read_set, write_set
from .errors import AplabError
from .fixtures import FIXTURES, regenerate, verify_fixtures
from .pipelines import PIPELINES, oracle_longest_ap
from .policy import Policy
from .setgen import bohr_sample, interval_set, primes_upto, random_bohr, random_set
from .sweep import SweepConfig, write_sweep


def _emit_set(A: SetOnZN, out: str | None) -> None:
    if out:
        write_set(out, A)
    else:
        sys.stdout.write("\n".join([f"N={A.N}"] + [str(x) for x in A]) + "\n")


def _gamma(text: str) -> list[int]:
    return [int(g) for g in text.split(",") if g.strip()]


def cmd_gen(args) -> int:
    if args.family == "random":
        A = random_set(args.N, args.alpha, args.seed)
    elif args.family == "interval":
        A = interval_set(args.N, args.m)
    elif args.family == "bohr":
        if args.gamma:
            B = make_bohr(args.N, _gamma(args.gamma), args.delta)
        else:
            B = random_bohr(args.N, args.d, args.delta, args.seed)
        if args.descriptor:
            write_descriptor(args.descriptor, B)
        A = bohr_sample(B, args.alpha, args.seed)
    else:
        A = primes_upto(args.n)
    _emit_set(A, args.out)
    return 0


def cmd_bohr(args) -> int:
    if args.descriptor:
        B = read_descriptor(args.descriptor)
    else:
        if args.N is None or args.gamma is None or args.delta is None:
            raise SystemExit("bohr: give --descriptor or all of --N, --gamma, --delta")
        B = make_bohr(args.N, _gamma(args.gamma), args.delta)
    if args.members:
        _emit_set(B.members, None)
    if args.ap:
        prog = ap_in_bohr(B)
        print(json.dumps({"start": prog.start, "difference": prog.difference, "length": prog.length}))
    if args.describe or not (args.members or args.ap):
        print(json.dumps(B.describe(), sort_keys=True))
    return 0


def cmd_almost_period(args) -> int:
    f = GroupFunction.indicator(read_set(args.f))
    S = read_set(args.S)
    T = read_set(args.T) if args.T else SetOnZN.full(S.N)
    X = almost_period_set(f, S, T, args.p, args.eps)
    _emit_set(X, args.out)
    return 0


def _input_sets(args):
    files = (args.a, args.b, args.c)
    if all(files):
        return tuple(read_set(p) for p in files)
    if any(files):
        raise SystemExit("give all of --a, --b, --c or none of them")
    if args.N is None:
        raise SystemExit("without set files, --N is required")
    return tuple(random_set(args.N, args.alpha, args.seed + j) for j in range(3))


def cmd_pipeline(args) -> int:
    policy = Policy.load(args.policy) if args.policy else None
    sets = _input_sets(args)
    if args.name == "increment":
        res = PIPELINES["increment"](*sets, omega=args.omega, policy=policy, strict=args.strict)
    elif args.name == "levelset":
        res = PIPELINES["levelset"](*sets, eps=args.eps, policy=policy, strict=args.strict)
    else:
        res = PIPELINES["cls"](*sets, policy=policy, strict=args.strict)
    for line in res.trace_lines():
        print(line)
    return 0 if res.provenance == "constructive" else 3


def cmd_oracle(args) -> int:
    ap = oracle_longest_ap(read_set(args.a), read_set(args.b), read_set(args.c), args.k)
    print(json.dumps({"start": ap.start, "difference": ap.difference, "length": ap.length,
                      "K": ap.K, "min_count": ap.min_count}))
    return 0


def cmd_sweep(args) -> int:
    ok, problems = write_sweep(SweepConfig.load(args.config), args.out, args.workers)
    for p in problems:
        print(p, file=sys.stderr)
    return 0 if ok else 1


def cmd_verify_fixtures(args) -> int:
    if args.regenerate:
        regenerate(args.path, args.name or None)
    report = verify_fixtures(args.path, args.name or None)
    for name in report["passed"]:
        print(f"ok      {name}")
    for key in ("drifts", "missing", "unknown"):
        for name in report[key]:
            print(f"{key[:-1] if key != 'missing' else key:<7} {name}")
    return 0 if report["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aplab", description="Long progressions in A+B+C on Z/NZ.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an input set")
    p.add_argument("family", choices=["random", "interval", "bohr", "primes"])
    p.add_argument("--N", type=int, default=1024)
    p.add_argument("--alpha", type=float, default=1.0, help="density (random, bohr)")
    p.add_argument("--m", type=int, default=1, help="interval length")
    p.add_argument("--n", type=int, default=100, help="primes up to n, embedded in Z/6nZ")
    p.add_argument("--gamma", help="comma-separated frequencies (bohr)")
    p.add_argument("--d", type=int, default=2, help="dimension of a random Bohr set")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--descriptor", help="also write the Bohr descriptor here")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output set file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bohr", help="inspect a Bohr set")
    p.add_argument("--descriptor")
    p.add_argument("--N", type=int)
    p.add_argument("--gamma")
    p.add_argument("--delta", type=float)
    p.add_argument("--describe", action="store_true")
    p.add_argument("--members", action="store_true")
    p.add_argument("--ap", action="store_true", help="progression found inside the set")
    p.set_defaults(func=cmd_bohr)

    p = sub.add_parser("almost-period", help="set of almost periods of 1_F * mu_S")
    p.add_argument("--f", required=True, help="set file for F")
    p.add_argument("--S", required=True)
    p.add_argument("--T", help="candidates are T - T (default: the whole group)")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_almost_period)

    p = sub.add_parser("pipeline", help="run a pipeline, JSON-lines trace on stdout")
    p.add_argument("name", choices=sorted(PIPELINES))
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--c")
    p.add_argument("--N", type=int, help="random inputs of this size when no set files are given")
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy")
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--strict", action="store_true", help="fail instead of falling back to the oracle")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("oracle", help="longest progression in {r >= K} by exhaustive search")
    for name in ("a", "b", "c"):
        p.add_argument(f"--{name}", required=True)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-fixtures", help="re-run regression fixtures")
    p.add_argument("--path")
    p.add_argument("--regenerate", action="store_true")
    p.add_argument("--name", action="append", choices=sorted(FIXTURES))
    p.set_defaults(func=cmd_verify_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AplabError, ValueError, FileNotFoundError) as exc:
        print(f"aplab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
