"""Print the pairwise-product statistic, its fitted exponent and verdict for every kind.

    python scripts/decay_table.py [--limit 1e7] [--per-decade 10]
"""

import argparse

from sumfunc.independence import independence_report
from sumfunc.sieve import BUILTIN_KINDS, build_tables, constant
from sumfunc.summatory import log_grid


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--limit", type=lambda s: int(float(s)), default=10**7)
    p.add_argument("--per-decade", type=int, default=10)
    args = p.parse_args(argv)

    kinds = BUILTIN_KINDS + (constant(1),)
    tables = build_tables(kinds, args.limit)
    grid = log_grid(1000, args.limit, args.per_decade)
    print(f"{'kind':<16}{'slope':>9}{'stderr':>10}{'growth':>8}  verdict / expectation")
    for kind in kinds:
        rep = independence_report(tables[kind], grid)
        flag = "PASS" if rep.passed else "FAIL"
        print(f"{str(kind):<16}{rep.slope:9.4f}{rep.stderr:10.2e}{rep.growth_exponent:8.3f}  {rep.verdict}; {rep.expectation} [{flag}]")


if __name__ == "__main__":
    main()
