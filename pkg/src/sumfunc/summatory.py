"""Partial sums S(n) of a table and their deviation from known asymptotes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sieve import FunctionKind, FunctionTable

EULER_GAMMA = 0.57721566490153286061
SIX_OVER_PI2 = 6.0 / math.pi**2
THREE_OVER_PI2 = 3.0 / math.pi**2

_INT64_MAX = 2**63 - 1


class ConfigurationError(ValueError):
    """A kind was paired with an asymptote it has no business with."""


@dataclass(frozen=True)
class SummatorySeries:
    kind: FunctionKind
    checkpoints: np.ndarray
    sums: np.ndarray  # int64 for integer kinds, float64 otherwise

    def __len__(self) -> int:
        return self.checkpoints.size

    def at(self, n: int):
        i = int(np.searchsorted(self.checkpoints, n))
        if i == self.checkpoints.size or self.checkpoints[i] != n:
            raise KeyError(f"{n} is not a checkpoint")
        return self.sums[i].item()


def log_grid(lo: int, hi: int, per_decade: int = 10) -> np.ndarray:
    """Strictly increasing integers, log-spaced from lo to hi inclusive."""
    if not 1 <= lo <= hi:
        raise ValueError(f"need 1 <= lo <= hi, got {lo}, {hi}")
    count = max(2, int(round(per_decade * math.log10(hi / lo))) + 1) if hi > lo else 1
    pts = np.unique(np.rint(np.geomspace(lo, hi, count)).astype(np.int64))
    pts[0], pts[-1] = lo, hi
    return np.unique(pts)


def _check_grid(checkpoints, limit: int) -> np.ndarray:
    cps = np.asarray(checkpoints, dtype=np.int64).ravel()
    if cps.size == 0:
        raise ValueError("empty checkpoint list")
    if np.any(np.diff(cps) <= 0):
        raise ValueError("checkpoints must be strictly increasing")
    if cps[0] < 1:
        raise ValueError("checkpoints must be positive")
    if cps[-1] > limit:
        raise IndexError(f"checkpoint {cps[-1]} exceeds table limit {limit}")
    return cps


def _integer_bound_ok(table: FunctionTable, n: int) -> None:
    vals = table.head(n)
    peak = int(np.abs(vals.astype(np.int64)).max())
    if peak * n > _INT64_MAX:
        raise OverflowError(f"|S| may reach {peak * n}, beyond int64")


def prefix_series(table: FunctionTable, checkpoints) -> SummatorySeries:
    """S(n_i) = sum of f(k) for k <= n_i, in one pass over the table.

    Integer kinds are summed exactly in int64.  Real kinds are summed with
    ``math.fsum`` per block between checkpoints and the block sums are again
    combined with ``fsum``, so each S(n_i) carries at most a few ulps of error.
    """
    cps = _check_grid(checkpoints, table.limit)
    vals = table.values
    if vals.dtype.kind in "iu":
        _integer_bound_ok(table, int(cps[-1]))
        sums = np.empty(cps.size, dtype=np.int64)
        acc = 0
        prev = 0
        for i, n in enumerate(cps.tolist()):
            acc += int(vals[prev:n].sum(dtype=np.int64))
            sums[i] = acc
            prev = n
        return SummatorySeries(table.kind, cps, sums)

    blocks: list[float] = []
    sums = np.empty(cps.size, dtype=np.float64)
    prev = 0
    for i, n in enumerate(cps.tolist()):
        blocks.append(math.fsum(vals[prev:n]))
        sums[i] = math.fsum(blocks)
        prev = n
    return SummatorySeries(table.kind, cps, sums)


def partial_sums(table: FunctionTable, n: int | None = None) -> np.ndarray:
    """The full sequence S(1), ..., S(n)."""
    n = table.limit if n is None else n
    vals = table.head(n)
    if vals.dtype.kind in "iu":
        _integer_bound_ok(table, n)
        return np.cumsum(vals, dtype=np.int64)
    return np.cumsum(vals, dtype=np.float64)


@dataclass(frozen=True)
class AsymptoteSpec:
    label: str
    main_term: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        return self.main_term(np.asarray(x, dtype=np.float64))


LINEAR = AsymptoteSpec("x", lambda x: x)
SQUAREFREE_DENSITY = AsymptoteSpec("6x/pi^2", lambda x: SIX_OVER_PI2 * x)
HALF_SQUAREFREE_DENSITY = AsymptoteSpec("3x/pi^2", lambda x: THREE_OVER_PI2 * x)
DIVISOR_SUM = AsymptoteSpec(
    "x log x + (2C-1)x", lambda x: x * np.log(x) + (2 * EULER_GAMMA - 1) * x
)
PRIME_COUNT = AsymptoteSpec("x/log x", lambda x: x / np.log(x))

ASYMPTOTES: dict[str, AsymptoteSpec] = {
    "von-mangoldt": LINEAR,
    "prime-log": LINEAR,
    "squarefree": SQUAREFREE_DENSITY,
    "squarefree-odd": HALF_SQUAREFREE_DENSITY,
    "squarefree-even": HALF_SQUAREFREE_DENSITY,
    "divisor-count": DIVISOR_SUM,
    "prime": PRIME_COUNT,
}


def asymptote_for(kind: FunctionKind) -> AsymptoteSpec:
    if kind.name == "constant":
        c = kind.constant
        return AsymptoteSpec("x" if c == 1 else f"{c}x", lambda x: c * x)
    try:
        return ASYMPTOTES[kind.name]
    except KeyError:
        raise ConfigurationError(f"no cataloged asymptote for {kind}") from None


@dataclass(frozen=True)
class DeviationSeries:
    kind: FunctionKind
    asymptote: str
    n: np.ndarray
    S: np.ndarray
    deviation: np.ndarray
    relative: np.ndarray

    def to_csv(self) -> str:
        lines = ["n,S,deviation,relative_deviation"]
        for n, s, d, r in zip(self.n.tolist(), self.S.tolist(), self.deviation.tolist(), self.relative.tolist()):
            lines.append(f"{n},{_g17(s)},{_g17(d)},{_g17(r)}")
        return "\n".join(lines) + "\n"


def _g17(x) -> str:
    return str(x) if isinstance(x, int) else format(x, ".17g")


def asymptote_deviation(series: SummatorySeries, spec: AsymptoteSpec | None = None) -> DeviationSeries:
    """(n, S(n) - A(n), (S(n) - A(n)) / A(n)) at every checkpoint."""
    expected = asymptote_for(series.kind)
    if spec is None:
        spec = expected
    elif spec.label != expected.label:
        raise ConfigurationError(f"asymptote {spec.label} does not belong to {series.kind}")
    n = series.checkpoints
    main = spec(n)
    dev = series.sums.astype(np.float64) - main
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = dev / main
    return DeviationSeries(series.kind, spec.label, n, series.sums, dev, rel)
