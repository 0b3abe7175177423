"""Run every experiment config in scripts/configs and print a summary table.

    python scripts/run_all.py [--out results] [--cache cache] [--only clt,taylor]

Tables are shared through the on-disk cache, so the second and later runs
skip the sieve.
"""

import argparse
import sys
import time
from pathlib import Path

from sumfunc.experiments import load_config, run_experiment

HERE = Path(__file__).resolve().parent


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--cache", default="cache")
    p.add_argument("--configs", default=str(HERE / "configs"))
    p.add_argument("--only", help="comma separated experiment ids")
    args = p.parse_args(argv)

    only = set(args.only.split(",")) if args.only else None
    failed = 0
    for cfg in sorted(Path(args.configs).glob("*.cfg")):
        if only and cfg.stem not in only:
            continue
        config = load_config(cfg, {"out": str(Path(args.out) / cfg.stem), "cache": args.cache})
        t0 = time.perf_counter()
        manifest = run_experiment(config)
        status = "PASS" if manifest.passed else "FAIL"
        failed += not manifest.passed
        print(f"{status}  {cfg.stem:<14} {time.perf_counter() - t0:7.2f} s  -> {config.out}")
        for name, ok in manifest.expectations.items():
            print(f"        {'ok ' if ok else 'BAD'} {name}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
