"""Normal-limit diagnostics for standardized partial sums.

Two normalizations of S(k), k = 1..n, are provided side by side:

* variant "A": Z_k = (S(k) - m k) / (sigma sqrt(k))   (per-index)
* variant "B": Z_k = (S(k) - m n) / (sigma sqrt(n))   (fixed n)

m and sigma^2 are the mean and (population) variance of f(1..n).  They are
estimated from the summands even when the summands are dependent; every
report says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import zeta

from .distribution import (
    NotInCatalogError,
    limit_step_distribution,
    moment,
    normal_cdf,
)
from .independence import InsufficientDataError, loglog_fit
from .sieve import FunctionTable, external
from .summatory import partial_sums

DEGENERACY_THRESHOLD = 1e-9
DEFAULT_WINDOW = 0.5
SIGMA_NOTE = "sigma is the sample standard deviation of f(1..n)"


@dataclass
class StandardizedSums:
    z: np.ndarray
    variant: str
    mean: float
    sigma: float
    degenerate: bool


def standardized_partial_sums(table: FunctionTable, n: int, variant: str = "A") -> StandardizedSums:
    """Z_1..Z_n for the requested normalization.

    A vanishing sigma does not raise: the result is flagged degenerate and
    every Z is 0.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    variant = variant.upper()
    if variant not in ("A", "B"):
        raise ValueError(f"variant must be 'A' or 'B', got {variant!r}")
    m = moment(table, n, 1)
    var = max(moment(table, n, 2) - m * m, 0.0)
    sigma = math.sqrt(var)
    if sigma == 0:
        return StandardizedSums(np.zeros(n), variant, m, 0.0, True)
    S = partial_sums(table, n).astype(np.float64)
    k = np.arange(1, n + 1, dtype=np.float64)
    if variant == "A":
        z = (S - m * k) / (sigma * np.sqrt(k))
    else:
        z = (S - m * n) / (sigma * math.sqrt(n))
    return StandardizedSums(z, variant, m, sigma, False)


def ks_normal(z) -> float:
    """KS distance between the empirical law of z and N(0, 1)."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("empty sample")
    support, counts = np.unique(z, return_counts=True)
    cum = np.cumsum(counts)
    m = z.size
    phi = normal_cdf(support)
    right = np.abs(cum / m - phi)
    left = np.abs((cum - counts) / m - phi)
    return float(max(right.max(), left.max()))


def ks_normal_bruteforce(z) -> float:
    """O(m^2) reference: scan every sample point, count by direct comparison."""
    z = np.asarray(z, dtype=np.float64)
    m = z.size
    pts = z.tolist()
    best = 0.0
    for y in pts:
        le = sum(1 for x in pts if x <= y)
        lt = sum(1 for x in pts if x < y)
        phi = normal_cdf(np.array([y]))[0]
        best = max(best, abs(le / m - phi), abs(lt / m - phi))
    return float(best)


@dataclass
class CltEntry:
    n: int
    window: float
    sample_mean: float
    sample_variance: float
    ks: float
    degenerate: bool
    verdict: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "window": self.window,
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "ks": self.ks,
            "degenerate": self.degenerate,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def normality_report(z, window: float = DEFAULT_WINDOW, *, ks_threshold: float = 0.05) -> CltEntry:
    """KS distance to N(0, 1) over the trailing ``window`` fraction of z.

    A windowed standard deviation below 1e-9 forces the verdict
    "degenerate" whatever the KS value.
    """
    z = np.asarray(z, dtype=np.float64)
    if not 0 < window <= 1:
        raise ValueError(f"window must be in (0, 1], got {window}")
    start = int(math.floor(z.size * (1 - window)))
    w = z[start:]
    if w.size == 0:
        raise ValueError("empty window")
    mean = float(w.mean())
    var = float(w.var())
    ks = ks_normal(w)
    degenerate = math.sqrt(var) < DEGENERACY_THRESHOLD
    if degenerate:
        verdict = "degenerate"
    elif ks <= ks_threshold:
        verdict = "normal"
    else:
        verdict = "not-normal"
    return CltEntry(z.size, window, mean, var, ks, degenerate, verdict)


def clt_report(table: FunctionTable, n: int, variant: str = "A", window: float = DEFAULT_WINDOW) -> CltEntry:
    """normality_report on the standardized sums of ``table`` up to n."""
    sz = standardized_partial_sums(table, n, variant)
    entry = normality_report(sz.z, window)
    if sz.degenerate:
        entry.degenerate = True
        entry.verdict = "degenerate"
        entry.notes.append("summand variance is zero; standardization impossible")
    entry.notes.append(SIGMA_NOTE)
    return entry


def block_clt_control(values, block: int) -> CltEntry:
    """CLT control from one sequence: standardized sums of disjoint blocks.

    Splits ``values`` into floor(len/block) blocks and compares the
    standardized block sums with N(0, 1).  Unlike a single partial-sum path,
    the block sums of i.i.d. summands are an honest normal sample.
    """
    v = np.asarray(values, dtype=np.float64)
    count = v.size // block
    if count < 2:
        raise ValueError("need at least two blocks")
    v = v[: count * block].reshape(count, block)
    mu = v.mean()
    sigma = v.std()
    if sigma == 0:
        return CltEntry(count, 1.0, 0.0, 0.0, 0.5, True, "degenerate")
    z = (v.sum(axis=1) - mu * block) / (sigma * math.sqrt(block))
    return normality_report(z, 1.0)


# ---------------------------------------------------------------------------
# alternating series with cancelling positive and negative parts


@dataclass(frozen=True)
class Geometric:
    """term_k = scale * ratio^k, k >= 1."""

    scale: Fraction
    ratio: Fraction

    def terms(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=np.float64)
        return float(self.scale) * np.power(float(self.ratio), k)

    def total(self) -> Fraction:
        return self.scale * self.ratio / (1 - self.ratio)

    def partial(self, n: int) -> Fraction:
        r = self.ratio
        return self.scale * r * (1 - r**n) / (1 - r)

    def describe(self) -> str:
        return f"{self.scale}*({self.ratio})^k"


@dataclass(frozen=True)
class PSeries:
    """term_k = scale / k^p, p > 1."""

    scale: float
    p: float

    def terms(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=np.float64)
        return self.scale / k**self.p

    def total(self) -> float:
        return float(self.scale * zeta(self.p))

    def describe(self) -> str:
        return f"{self.scale}/k^{self.p}"


def geometric(scale, ratio) -> Geometric:
    return Geometric(Fraction(scale), Fraction(ratio))


@dataclass(frozen=True)
class SeriesSpec:
    positive: Geometric | PSeries
    negative: Geometric | PSeries

    def __post_init__(self):
        for rule, sign in ((self.positive, 1), (self.negative, -1)):
            if isinstance(rule, Geometric) and not 0 < rule.ratio < 1:
                raise ValueError(f"geometric ratio {rule.ratio} does not converge")
            if isinstance(rule, PSeries) and rule.p <= 1:
                raise ValueError(f"p-series exponent {rule.p} does not converge")
            if sign * rule.scale <= 0:
                raise ValueError("positive rule needs scale > 0, negative rule scale < 0")
        a, b = self.positive.total(), self.negative.total()
        exact = isinstance(a, Fraction) and isinstance(b, Fraction)
        if (a + b != 0) if exact else abs(float(a) + float(b)) > 1e-12 * abs(float(a)):
            raise ValueError(f"positive part sums to {a}, negative part to {b}; they must cancel")

    @property
    def A(self):
        return self.positive.total()

    def describe(self) -> str:
        return f"a_k = {self.positive.describe()}, b_k = {self.negative.describe()}, A = {self.A}"


def alternating_series_table(spec: SeriesSpec, n: int):
    """Table of f(k) = a_k + b_k on 1..n, and the common sum A."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    f = spec.positive.terms(n) + spec.negative.terms(n)
    kind = external(spec.describe(), bounded=True, integer=False)
    return FunctionTable(kind, n, f, {"A": str(spec.A)}), spec.A


def closed_form_partial(spec: SeriesSpec, n: int) -> float:
    """S(n) from the geometric partial-sum formula (both rules geometric)."""
    if not (isinstance(spec.positive, Geometric) and isinstance(spec.negative, Geometric)):
        raise TypeError("closed form is only available for geometric rules")
    return float(spec.positive.partial(n) + spec.negative.partial(n))


DEGENERATE_LIMIT_NOTE = (
    "S(n) = o(1) forces the limit law of S_n to concentrate at 0 (degenerate); "
    "the claimed nondegenerate normal limit is not what the measurement shows"
)


def alternating_report(spec: SeriesSpec, n: int, window: float = DEFAULT_WINDOW) -> dict:
    table, A = alternating_series_table(spec, n)
    S = partial_sums(table, n)
    entry = clt_report(table, n, "A", window)
    start = int(math.floor(n * (1 - window)))
    raw_std = float(S[start:].std())
    if raw_std < DEGENERACY_THRESHOLD and not entry.degenerate:
        entry.degenerate = True
        entry.verdict = "degenerate"
    entry.notes.append(DEGENERATE_LIMIT_NOTE)
    return {
        "spec": spec.describe(),
        "A": str(A),
        "n": n,
        "S_n": float(S[-1]),
        "S_window_std": raw_std,
        "report": entry.to_dict(),
    }


# ---------------------------------------------------------------------------
# mean gap decay


@dataclass
class MeanDecay:
    slope: float
    stderr: float
    dropped_zero_points: int
    reference_mean: float
    reference_source: str
    required_slope: float = -1.0

    @property
    def condition_holds(self) -> bool:
        # slack absorbs rounding in an exact power-law fit
        return self.slope <= self.required_slope + 1e-9

    @property
    def verdict(self) -> str:
        if self.condition_holds:
            return "condition holds: mean gap decays like 1/n or faster"
        return (
            f"condition fails: mean gap decays like n^{self.slope:.3f}, slower than the 1/n "
            "required for a normal limit"
        )

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "dropped_zero_points": self.dropped_zero_points,
            "reference_mean": self.reference_mean,
            "reference_source": self.reference_source,
            "required_slope": self.required_slope,
            "condition_holds": self.condition_holds,
            "verdict": self.verdict,
        }


def reference_mean(table: FunctionTable, n: int) -> tuple[float, str]:
    """Limit-law mean when cataloged, else the sample mean at n (flagged)."""
    try:
        return limit_step_distribution(table.kind).mean, "limit law"
    except NotInCatalogError:
        return moment(table, n, 1), "sample mean at final grid point (no cataloged limit law)"


def mean_decay_exponent(table: FunctionTable, grid, reference: float | None = None) -> MeanDecay:
    """Slope of log|S(n)/n - reference| against log n."""
    grid = np.asarray(grid, dtype=np.int64)
    if grid.size < 3:
        raise InsufficientDataError("need at least 3 grid points")
    source = "given"
    if reference is None:
        reference, source = reference_mean(table, int(grid[-1]))
    S = partial_sums(table, int(grid[-1]))
    gap = S[grid - 1] / grid - reference
    slope, stderr, dropped = loglog_fit(grid, gap)
    return MeanDecay(slope, stderr, dropped, float(reference), source)
