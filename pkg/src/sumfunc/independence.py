"""The pairwise-product independence statistic and its decay.

For f(1..n) let P = sum_{i != j} f(i) f(j) = (sum f)^2 - sum f^2.  The mean
of pairwise products is P / (n(n-1)), the product-of-means term is P / n^2,
and their difference is

    delta(n) = P * (1/(n(n-1)) - 1/n^2) = P / (n^2 (n-1)).

All quantities are evaluated from exact running sums (Python integers for
integer kinds, ``fsum`` totals converted to ``Fraction`` for real kinds), so
the difference of the two means and the closed form agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .sieve import FunctionKind, FunctionTable


class InsufficientDataError(ValueError):
    """Not enough usable points for a fit."""


def _sums(table: FunctionTable, n: int) -> tuple[Fraction, Fraction]:
    """Exact (sum f, sum f^2) over 1..n as rationals."""
    vals = table.head(n)
    if vals.dtype.kind in "iu":
        v = vals.astype(np.int64)
        return Fraction(int(v.sum())), Fraction(int((v * v).sum()))
    s1 = math.fsum(vals)
    s2 = math.fsum(vals * vals)
    return Fraction(s1), Fraction(s2)


def _pair_sum(s1: Fraction, s2: Fraction) -> Fraction:
    return s1 * s1 - s2


def mean_pair_product_exact(table: FunctionTable, n: int) -> Fraction:
    if n < 2:
        raise ValueError(f"mean of pairwise products needs n >= 2, got {n}")
    s1, s2 = _sums(table, n)
    return _pair_sum(s1, s2) / (n * (n - 1))


def product_of_means_exact(table: FunctionTable, n: int) -> Fraction:
    if not 1 <= n <= table.limit:
        raise ValueError(f"n = {n} outside 1..{table.limit}")
    s1, s2 = _sums(table, n)
    return _pair_sum(s1, s2) / (n * n)


def mean_pair_product(table: FunctionTable, n: int) -> float:
    """Average of f(i) f(j) over ordered pairs i != j in 1..n."""
    return float(mean_pair_product_exact(table, n))


def product_of_means(table: FunctionTable, n: int) -> float:
    """((sum f)^2 - sum f^2) / n^2."""
    return float(product_of_means_exact(table, n))


def mean_pair_product_bruteforce(table: FunctionTable, n: int) -> float:
    """O(n^2) double loop over ordered pairs; only meant for small n."""
    if n < 2:
        raise ValueError(f"mean of pairwise products needs n >= 2, got {n}")
    if n > 2000:
        raise ValueError("brute-force path is limited to n <= 2000")
    f = table.head(n).tolist()
    total = 0
    for i in range(n):
        fi = f[i]
        for j in range(n):
            if i != j:
                total += fi * f[j]
    return total / (n * (n - 1))


def delta_exact(table: FunctionTable, n: int) -> Fraction:
    """Difference of the two means, evaluated as such."""
    return mean_pair_product_exact(table, n) - product_of_means_exact(table, n)


def delta_closed_form(table: FunctionTable, n: int) -> Fraction:
    if n < 2:
        raise ValueError(f"delta needs n >= 2, got {n}")
    s1, s2 = _sums(table, n)
    return _pair_sum(s1, s2) * (Fraction(1, n * (n - 1)) - Fraction(1, n * n))


def independence_delta(table: FunctionTable, n: int) -> float:
    return float(delta_exact(table, n))


def delta_grid(table: FunctionTable, grid) -> dict[str, np.ndarray]:
    """Both means, delta, and S(n) on a grid, from one running pass."""
    grid = [int(n) for n in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 2 or grid[-1] > table.limit:
        raise ValueError(f"grid must lie in 2..{table.limit}")
    vals = table.values
    integer = vals.dtype.kind in "iu"
    s1 = s2 = Fraction(0)
    int1 = int2 = 0
    blocks1: list[float] = []
    blocks2: list[float] = []
    out = {k: np.empty(len(grid)) for k in ("mean_pair_product", "product_of_means", "delta", "S")}
    prev = 0
    for i, n in enumerate(grid):
        chunk = vals[prev:n]
        if integer:
            c = chunk.astype(np.int64)
            int1 += int(c.sum())
            int2 += int((c * c).sum())
            s1, s2 = Fraction(int1), Fraction(int2)
        else:
            blocks1.append(math.fsum(chunk))
            blocks2.append(math.fsum(chunk * chunk))
            s1, s2 = Fraction(math.fsum(blocks1)), Fraction(math.fsum(blocks2))
        prev = n
        p = _pair_sum(s1, s2)
        mpp = p / (n * (n - 1))
        pom = p / (n * n)
        out["mean_pair_product"][i] = float(mpp)
        out["product_of_means"][i] = float(pom)
        out["delta"][i] = float(mpp - pom)
        out["S"][i] = float(s1)
    out["n"] = np.array(grid, dtype=np.int64)
    return out


def loglog_fit(x, y) -> tuple[float, float, int]:
    """OLS slope of log|y| on log x; zero y are dropped and counted."""
    x = np.asarray(x, dtype=np.float64)
    y = np.abs(np.asarray(y, dtype=np.float64))
    if x.size != y.size:
        raise ValueError("x and y differ in length")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    keep = y > 0
    dropped = int((~keep).sum())
    if keep.sum() < 3:
        raise InsufficientDataError(f"only {int(keep.sum())} nonzero points, need 3")
    res = stats.linregress(np.log(x[keep]), np.log(y[keep]))
    return float(res.slope), float(res.stderr), dropped


def decay_exponent(n, delta) -> tuple[float, float]:
    """Least-squares slope of log|delta| against log n, with its standard error."""
    slope, stderr, _ = loglog_fit(n, delta)
    return slope, stderr


# verdict labels
FAST = "decays-like-1/n-or-faster"
ONE_OVER_N = "bounded-by-C/n"
VANISHING = "vanishing"
NON_VANISHING = "non-vanishing"


@dataclass
class Classification:
    verdict: str
    expectation: str
    passed: bool
    slope: float
    growth_exponent: float
    notes: list[str] = field(default_factory=list)


def classify(
    bounded: bool,
    same_sign: bool,
    growth_exponent: float,
    slope: float,
    *,
    tol: float = 0.1,
    growth_tol: float = 0.05,
    delta_shrinks: bool | None = None,
) -> Classification:
    """Compare a measured decay slope with what the summand class predicts.

    bounded summands, or same-sign summands with S(n) = O(n), predict delta
    = O(1/n), i.e. slope <= -1 (within ``tol``); S(n) = O(n) means a growth
    exponent within ``growth_tol`` of 1.  S(n) = o(n^{3/2}) only
    predicts delta -> 0, i.e. a negative slope (and, when supplied, a final
    |delta| below the first one).
    """
    if slope <= -1 - tol:
        verdict = FAST
    elif slope <= -1 + tol:
        verdict = ONE_OVER_N
    elif slope < 0:
        verdict = VANISHING
    else:
        verdict = NON_VANISHING

    notes = []
    if bounded:
        expectation = "O(1/n): bounded summands"
        passed = slope <= -1 + tol
    elif same_sign and growth_exponent <= 1 + growth_tol:
        expectation = "O(1/n): same-sign summands with S(n) = O(n)"
        passed = slope <= -1 + tol
    elif growth_exponent < 1.5:
        expectation = "o(1): S(n) = o(n^1.5)"
        passed = slope < 0 and (delta_shrinks is None or delta_shrinks)
    else:
        expectation = "none: S(n) grows at least like n^1.5"
        passed = True
        notes.append("no decay predicted for this growth rate")
    return Classification(verdict, expectation, passed, slope, growth_exponent, notes)


@dataclass
class IndependenceReport:
    kind: str
    grid: list[int]
    mean_pair_product: list[float]
    product_of_means: list[float]
    delta: list[float]
    slope: float
    stderr: float
    dropped_zero_points: int
    growth_exponent: float
    square_bound_ratio: list[float]  # |delta(n)| / (S(n)^2 / n^3)
    verdict: str
    expectation: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "grid": self.grid,
            "mean_pair_product": self.mean_pair_product,
            "product_of_means": self.product_of_means,
            "delta": self.delta,
            "slope": self.slope,
            "stderr": self.stderr,
            "dropped_zero_points": self.dropped_zero_points,
            "growth_exponent": self.growth_exponent,
            "square_bound_ratio": self.square_bound_ratio,
            "verdict": self.verdict,
            "expectation": self.expectation,
            "pass": self.passed,
        }


def independence_report(table: FunctionTable, grid, *, tol: float = 0.1) -> IndependenceReport:
    """Delta on ``grid``, its fitted exponent, and the class verdict."""
    g = delta_grid(table, grid)
    slope, stderr, dropped = loglog_fit(g["n"], g["delta"])
    # |S| + 1 keeps signed summatories with zero crossings fittable
    growth, _, _ = loglog_fit(g["n"], np.abs(g["S"]) + 1)
    kind: FunctionKind = table.kind
    d = np.abs(g["delta"])
    cls = classify(kind.bounded, kind.same_sign, growth, slope, tol=tol, delta_shrinks=bool(d[-1] < d[0]))
    n = g["n"].astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d / (g["S"] ** 2 / n**3)
    return IndependenceReport(
        kind=str(kind),
        grid=g["n"].tolist(),
        mean_pair_product=g["mean_pair_product"].tolist(),
        product_of_means=g["product_of_means"].tolist(),
        delta=g["delta"].tolist(),
        slope=slope,
        stderr=stderr,
        dropped_zero_points=dropped,
        growth_exponent=growth,
        square_bound_ratio=ratio.tolist(),
        verdict=cls.verdict,
        expectation=cls.expectation,
        passed=cls.passed,
    )
