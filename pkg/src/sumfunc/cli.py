"""``sumfunc`` command line: build, run, verify.

Exit codes: 0 pass, 1 expectation failed, 2 usage, 3 I/O or integrity.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .cache import IntegrityError, cache_store
from .experiments import EXPERIMENTS, UsageError, load_config, run_experiment
from .sieve import DEFAULT_SEGMENT, ResourceError, build_table, kind_from_name, verify_table

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sumfunc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a table and store it in the cache")
    b.add_argument("--kind", required=True)
    b.add_argument("--limit", required=True, type=lambda s: int(float(s)))
    b.add_argument("--segment", type=int, default=DEFAULT_SEGMENT)
    b.add_argument("--cache", required=True)

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("--experiment", required=True, help=f"one of: {', '.join(EXPERIMENTS)}")
    r.add_argument("--config", help="flat key = value config file")
    r.add_argument("--out")
    r.add_argument("--kind")
    r.add_argument("--limit")
    r.add_argument("--grid")
    r.add_argument("--t-grid", dest="t_grid")
    r.add_argument("--seed")
    r.add_argument("--cache")
    r.add_argument("--tolerance")

    v = sub.add_parser("verify", help="check a freshly built table against trial division")
    v.add_argument("--kind", required=True)
    v.add_argument("--limit", required=True, type=lambda s: int(float(s)))
    v.add_argument("--up-to", required=True, type=lambda s: int(float(s)))
    v.add_argument("--samples", type=int, default=0)
    v.add_argument("--seed", type=int, default=0)
    return p


def _build(args) -> int:
    table = build_table(kind_from_name(args.kind), args.limit, args.segment)
    path = cache_store(table, args.cache)
    print(f"{table.kind} up to {table.limit}: {path} ({table.build_meta['seconds']:.2f} s)")
    return EXIT_PASS


def _run(args) -> int:
    overrides = {
        "experiment": args.experiment,
        "out": args.out,
        "kind": args.kind,
        "limit": args.limit,
        "grid": args.grid,
        "t_grid": args.t_grid,
        "seed": args.seed,
        "cache": args.cache,
        "tolerance": args.tolerance,
    }
    config = load_config(args.config, overrides)
    manifest = run_experiment(config)
    for name, ok in manifest.expectations.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"results in {config.out}: {', '.join(manifest.outputs)}")
    return EXIT_PASS if manifest.passed else EXIT_FAIL


def _verify(args) -> int:
    table = build_table(kind_from_name(args.kind), args.limit)
    rep = verify_table(table, args.up_to, args.samples, args.seed)
    for k, expected, got in rep.mismatches[:20]:
        print(f"mismatch at {k}: expected {expected}, got {got}")
    print(f"{table.kind}: checked {rep.checked} values, {len(rep.mismatches)} mismatches")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"build": _build, "run": _run, "verify": _verify}[args.command]
    try:
        return handler(args)
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrityError, OSError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
