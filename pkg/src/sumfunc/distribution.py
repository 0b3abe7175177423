"""Value distributions, characteristic functions and moment expansions.

CDFs follow the right-continuous convention P(f <= y).  Distances are taken
at every jump point of either law and on both sides of it, so the choice
between P(f < y) and P(f <= y) never changes a sup.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .sieve import FunctionKind, FunctionTable
from .summatory import SIX_OVER_PI2, THREE_OVER_PI2, partial_sums


class NotInCatalogError(KeyError):
    """No limit law is known for this kind."""


class MomentPrecisionWarning(RuntimeWarning):
    """An integer power sum would overflow int64 and was done in floating point."""


def normal_cdf(y):
    """Standard normal CDF through the complementary error function."""
    y = np.asarray(y, dtype=np.float64)
    return 0.5 * special.erfc(-y / math.sqrt(2.0))


@dataclass(frozen=True)
class EmpiricalDistribution:
    support: np.ndarray  # strictly increasing
    counts: np.ndarray  # exact integer counts
    n: int
    bin_width: float | None = None  # set when real values were binned

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def jumps(self) -> np.ndarray:
        return self.support

    def cdf(self, y) -> np.ndarray:
        cum = np.concatenate(([0], np.cumsum(self.counts)))
        return cum[np.searchsorted(self.support, y, side="right")] / self.n

    def cdf_left(self, y) -> np.ndarray:
        cum = np.concatenate(([0], np.cumsum(self.counts)))
        return cum[np.searchsorted(self.support, y, side="left")] / self.n

    def frequency_of(self, value) -> float:
        i = np.searchsorted(self.support, value)
        if i < self.support.size and self.support[i] == value:
            return float(self.counts[i] / self.n)
        return 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "support": self.support.tolist(),
            "counts": self.counts.tolist(),
            "frequencies": self.frequencies.tolist(),
            "bin_width": self.bin_width,
        }


@dataclass(frozen=True)
class StepDistribution:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("jump points must be strictly increasing")
        if np.any(self.masses < 0) or abs(self.masses.sum() - 1) > 1e-12:
            raise ValueError("masses must be nonnegative and sum to 1")

    @property
    def levels(self) -> np.ndarray:
        lv = np.cumsum(self.masses)
        lv[-1] = 1.0
        return lv

    @property
    def jumps(self) -> np.ndarray:
        return self.points

    def cdf(self, y) -> np.ndarray:
        lv = np.concatenate(([0.0], self.levels))
        return lv[np.searchsorted(self.points, y, side="right")]

    def cdf_left(self, y) -> np.ndarray:
        lv = np.concatenate(([0.0], self.levels))
        return lv[np.searchsorted(self.points, y, side="left")]

    @property
    def mean(self) -> float:
        return float(np.dot(self.points, self.masses))

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "masses": self.masses.tolist(), "levels": self.levels.tolist()}


class StandardNormal:
    jumps = np.zeros(0)

    @staticmethod
    def cdf(y):
        return normal_cdf(y)

    cdf_left = cdf


STANDARD_NORMAL = StandardNormal()


def _step(points, masses) -> StepDistribution:
    return StepDistribution(np.asarray(points, dtype=np.float64), np.asarray(masses, dtype=np.float64))


def limit_step_distribution(kind: FunctionKind) -> StepDistribution:
    """Cataloged limit law of the values f(k), k uniform on 1..n, n -> infinity."""
    name = kind.name
    if name == "moebius":
        return _step([-1, 0, 1], [THREE_OVER_PI2, 1 - SIX_OVER_PI2, THREE_OVER_PI2])
    if name == "liouville":
        return _step([-1, 1], [0.5, 0.5])
    if name == "prime":
        return _step([0], [1.0])
    if name == "squarefree":
        return _step([0, 1], [1 - SIX_OVER_PI2, SIX_OVER_PI2])
    if name in ("squarefree-odd", "squarefree-even"):
        return _step([0, 1], [1 - THREE_OVER_PI2, THREE_OVER_PI2])
    if name == "constant":
        return _step([kind.constant], [1.0])
    raise NotInCatalogError(f"no cataloged limit distribution for {kind}")


def fd_bin_width(values: np.ndarray) -> float:
    """Freedman-Diaconis width, falling back to 1 when the IQR vanishes."""
    q75, q25 = np.percentile(values, [75, 25])
    w = 2 * (q75 - q25) / values.size ** (1 / 3)
    return float(w) if w > 0 else 1.0


def value_distribution(values, bin_width: float | None = None) -> EmpiricalDistribution:
    """Empirical law of an arbitrary value sequence.

    Integer sequences keep their exact support; real sequences are binned
    (Freedman-Diaconis width unless ``bin_width`` is given) and each bin is
    represented by its midpoint.
    """
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty value sequence")
    if values.dtype.kind in "iub":
        support, counts = np.unique(values, return_counts=True)
        return EmpiricalDistribution(support, counts.astype(np.int64), values.size)
    width = fd_bin_width(values) if bin_width is None else float(bin_width)
    idx = np.floor(values / width).astype(np.int64)
    bins, counts = np.unique(idx, return_counts=True)
    return EmpiricalDistribution((bins + 0.5) * width, counts.astype(np.int64), values.size, width)


def empirical_value_distribution(
    table: FunctionTable, n: int, bin_width: float | None = None
) -> EmpiricalDistribution:
    """v_a(n) = #{k <= n : f(k) = a} / n for every value a."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return value_distribution(table.head(n), bin_width)


def ks_distance(a, b) -> float:
    """sup_y |F_a(y) - F_b(y)| over both one-sided limits at every jump.

    ``a`` and ``b`` are any of EmpiricalDistribution, StepDistribution or
    STANDARD_NORMAL.  Two continuous laws are not supported.
    """
    pts = np.union1d(a.jumps, b.jumps)
    if pts.size == 0:
        raise ValueError("need at least one law with jumps")
    right = np.abs(a.cdf(pts) - b.cdf(pts))
    left = np.abs(a.cdf_left(pts) - b.cdf_left(pts))
    return float(max(right.max(), left.max()))


@dataclass
class CharFunSamples:
    t: np.ndarray
    values: np.ndarray  # complex
    n: int

    def to_csv(self, remainder=None) -> str:
        rem = np.full(self.t.size, np.nan) if remainder is None else np.abs(remainder)
        rows = ["t,re_phi,im_phi,abs_remainder"]
        for t, z, r in zip(self.t.tolist(), self.values.tolist(), rem.tolist()):
            rows.append(f"{t:.17g},{z.real:.17g},{z.imag:.17g},{r:.17g}")
        return "\n".join(rows) + "\n"


def _charfun_grouped(support: np.ndarray, counts: np.ndarray, n: int, t_grid: np.ndarray) -> np.ndarray:
    out = np.empty(t_grid.size, dtype=np.complex128)
    sup = support.astype(np.float64)
    c = counts.astype(np.float64)
    for i, t in enumerate(t_grid.tolist()):
        arg = t * sup
        out[i] = complex(math.fsum(c * np.cos(arg)), math.fsum(c * np.sin(arg))) / n
    return out


def empirical_charfun(values, t_grid) -> CharFunSamples:
    """phi(t) = (1/n) sum_k exp(i t f(k)) on every t of the grid.

    Integer-valued input is first collapsed to (value, count) pairs; real and
    imaginary parts are accumulated with ``math.fsum``.
    """
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty value sequence")
    t_grid = np.asarray(t_grid, dtype=np.float64).ravel()
    n = values.size
    if values.dtype.kind in "iub":
        support, counts = np.unique(values, return_counts=True)
    else:
        support, counts = values.astype(np.float64), np.ones(n)
    return CharFunSamples(t_grid, _charfun_grouped(support, counts, n, t_grid), n)


def step_charfun(law: StepDistribution, t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=np.float64)
    return np.exp(1j * np.outer(t, law.points)) @ law.masses


def moment(table: FunctionTable, n: int, j: int) -> float:
    """(1/n) sum_{k<=n} f(k)^j."""
    if j < 1:
        raise ValueError(f"moment order must be >= 1, got {j}")
    vals = table.head(n)
    if vals.dtype.kind in "iu":
        peak = int(np.abs(vals.astype(np.int64)).max())
        if peak**j * n < 2**63:
            return int(np.power(vals.astype(np.int64), j).sum()) / n
        warnings.warn(
            f"{table.kind} power sum of order {j} exceeds int64; using floating point",
            MomentPrecisionWarning,
            stacklevel=2,
        )
    return math.fsum(np.power(vals.astype(np.float64), j)) / n


@dataclass
class RemainderReport:
    t: np.ndarray
    remainder: np.ndarray  # complex
    order: int
    max_abs: float
    max_ratio: float  # max |r(t)| / |t|^order over t != 0

    def ratio_profile(self, lower: float, uppers) -> list[float]:
        """max |r(t)|/|t|^order over lower <= |t| <= u, for each u."""
        at = np.abs(self.t)
        ratio = np.abs(self.remainder) / np.where(at > 0, at, np.nan) ** self.order
        out = []
        for u in uppers:
            m = (at >= lower) & (at <= u)
            if not m.any():
                raise ValueError(f"no grid points in [{lower}, {u}]")
            out.append(float(np.nanmax(ratio[m])))
        return out


def taylor_polynomial(t, moments) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.ones(t.size, dtype=np.complex128)
    for j, m in enumerate(moments, start=1):
        out += (1j * t) ** j * m / math.factorial(j)
    return out


def taylor_check(samples: CharFunSamples, moments, order: int) -> RemainderReport:
    """Remainder of phi against its order-``order`` moment expansion."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if len(moments) < order:
        raise ValueError(f"need {order} moments, got {len(moments)}")
    t = samples.t
    nonzero = t != 0
    if not nonzero.any():
        raise ValueError("t grid has no nonzero point")
    r = samples.values - taylor_polynomial(t, list(moments)[:order])
    ratio = np.abs(r[nonzero]) / np.abs(t[nonzero]) ** order
    return RemainderReport(t, r, order, float(np.abs(r).max()), float(ratio.max()))


@dataclass
class ComparisonReport:
    t: np.ndarray
    lhs: np.ndarray  # charfun of S(k), k uniform on 1..n
    rhs: np.ndarray  # (charfun of f on 1..n)^n
    discrepancy: np.ndarray
    n: int
    # distance of the finite-n charfun of f from the limit law, against |t| g(n)
    limit_remainder: np.ndarray | None = None
    mean_gap: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "t": self.t.tolist(),
            "lhs_re": self.lhs.real.tolist(),
            "lhs_im": self.lhs.imag.tolist(),
            "rhs_re": self.rhs.real.tolist(),
            "rhs_im": self.rhs.imag.tolist(),
            "discrepancy": self.discrepancy.tolist(),
            "notes": self.notes,
        }
        if self.limit_remainder is not None:
            d["limit_remainder"] = self.limit_remainder.tolist()
            d["mean_gap"] = self.mean_gap
        return d


def product_charfun_compare(table: FunctionTable, n: int, t_grid) -> ComparisonReport:
    """Measure how far the charfun of S(k) is from the i.i.d. product surrogate."""
    t_grid = np.asarray(t_grid, dtype=np.float64).ravel()
    S = partial_sums(table, n)
    lhs = empirical_charfun(S, t_grid).values
    phi_f = empirical_charfun(table.head(n), t_grid).values
    rhs = phi_f**n
    rep = ComparisonReport(t_grid, lhs, rhs, np.abs(lhs - rhs), n)
    try:
        law = limit_step_distribution(table.kind)
    except NotInCatalogError:
        rep.notes.append("no cataloged limit law; limit remainder not measured")
    else:
        rep.limit_remainder = np.abs(phi_f - step_charfun(law, t_grid))
        rep.mean_gap = abs(moment(table, n, 1) - law.mean)
    return rep
