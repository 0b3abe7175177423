"""Exact tables of arithmetic functions f(1..N).

Tables are produced by a segmented smallest-prime-factor style sieve: every
segment is factored by dividing out the base primes up to sqrt(N), and one
pass yields Moebius, Liouville, divisor count and the von Mangoldt data at
once.  ``oracle_value`` is a separate trial-division path used to check the
sieve and shares no code with it.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "FunctionKind",
    "FunctionTable",
    "VerificationReport",
    "ResourceError",
    "MOEBIUS",
    "LIOUVILLE",
    "SQUAREFREE",
    "PRIME",
    "DIVISOR_COUNT",
    "VON_MANGOLDT",
    "PRIME_LOG",
    "SQUAREFREE_ODD",
    "SQUAREFREE_EVEN",
    "BUILTIN_KINDS",
    "constant",
    "external",
    "kind_from_name",
    "build_table",
    "build_tables",
    "oracle_value",
    "verify_table",
    "trial_factor",
    "simple_primes",
]

DEFAULT_SEGMENT = 1 << 18
DEFAULT_MEMORY_BUDGET = 4 << 30

# cell encodings shared with the binary cache
INT8 = 0x01
INT32 = 0x04
FLOAT64 = 0x08
_DTYPES = {INT8: np.int8, INT32: np.int32, FLOAT64: np.float64}


class ResourceError(MemoryError):
    """Raised when a build would exceed the configured memory budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"table build needs ~{required} bytes, budget is {budget} bytes")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class FunctionKind:
    """Identity and static properties of one arithmetic function.

    ``constant`` is only used by the Constant kind, ``label`` only by
    External tables (values supplied from outside the sieve).
    """

    name: str
    kind_id: int
    bounded: bool
    integer: bool
    same_sign: bool
    constant: float | None = None
    label: str | None = None

    @property
    def encoding(self) -> int:
        if not self.integer:
            return FLOAT64
        if self.name == "divisor-count":
            return INT32
        if self.name == "constant" and abs(self.constant) > 127:
            return INT32
        return INT8

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(_DTYPES[self.encoding])

    def __str__(self) -> str:
        if self.name == "constant":
            return f"constant({_fmt_const(self.constant)})"
        if self.name == "external" and self.label:
            return f"external({self.label})"
        return self.name


def _fmt_const(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


MOEBIUS = FunctionKind("moebius", 1, bounded=True, integer=True, same_sign=False)
LIOUVILLE = FunctionKind("liouville", 2, bounded=True, integer=True, same_sign=False)
SQUAREFREE = FunctionKind("squarefree", 3, bounded=True, integer=True, same_sign=True)
PRIME = FunctionKind("prime", 4, bounded=True, integer=True, same_sign=True)
DIVISOR_COUNT = FunctionKind("divisor-count", 5, bounded=False, integer=True, same_sign=True)
VON_MANGOLDT = FunctionKind("von-mangoldt", 6, bounded=False, integer=False, same_sign=True)
PRIME_LOG = FunctionKind("prime-log", 7, bounded=False, integer=False, same_sign=True)
# square-free n with an odd / even number of prime factors (mu = -1 / mu = +1)
SQUAREFREE_ODD = FunctionKind("squarefree-odd", 10, bounded=True, integer=True, same_sign=True)
SQUAREFREE_EVEN = FunctionKind("squarefree-even", 11, bounded=True, integer=True, same_sign=True)

BUILTIN_KINDS = (
    MOEBIUS,
    LIOUVILLE,
    SQUAREFREE,
    PRIME,
    DIVISOR_COUNT,
    VON_MANGOLDT,
    PRIME_LOG,
    SQUAREFREE_ODD,
    SQUAREFREE_EVEN,
)
_CONSTANT_ID = 8
_EXTERNAL_ID = 9


def constant(c: float = 1) -> FunctionKind:
    """The kind f(n) = c for every n."""
    integer = float(c).is_integer() and abs(c) < 2**31
    return FunctionKind(
        "constant",
        _CONSTANT_ID,
        bounded=True,
        integer=integer,
        same_sign=True,
        constant=int(c) if integer else float(c),
    )


def external(label: str = "", *, bounded: bool = True, integer: bool = False) -> FunctionKind:
    """Kind tag for tables whose values are supplied by the caller."""
    return FunctionKind(
        "external", _EXTERNAL_ID, bounded=bounded, integer=integer, same_sign=False, label=label
    )


def kind_from_name(name: str) -> FunctionKind:
    """Parse a CLI/config kind id such as ``moebius`` or ``constant:1``."""
    key = name.strip().lower().replace("_", "-")
    aliases = {
        "mu": MOEBIUS,
        "mobius": MOEBIUS,
        "lambda": LIOUVILLE,
        "tau": DIVISOR_COUNT,
        "divisors": DIVISOR_COUNT,
        "psi": VON_MANGOLDT,
        "theta": PRIME_LOG,
        "q": SQUAREFREE,
        "q1": SQUAREFREE_ODD,
        "q2": SQUAREFREE_EVEN,
        "pi": PRIME,
    }
    for k in BUILTIN_KINDS:
        aliases[k.name] = k
    if key in aliases:
        return aliases[key]
    if key.startswith("constant"):
        _, _, arg = key.partition(":")
        arg = arg or key[len("constant"):].strip("()")
        return constant(float(arg) if arg else 1)
    raise ValueError(f"unknown function kind {name!r}; valid: {sorted(aliases)} or constant:<c>")


def kind_from_id(kind_id: int, first_value: float | None = None) -> FunctionKind:
    for k in BUILTIN_KINDS:
        if k.kind_id == kind_id:
            return k
    if kind_id == _CONSTANT_ID:
        return constant(first_value if first_value is not None else 1)
    if kind_id == _EXTERNAL_ID:
        return external()
    raise ValueError(f"unknown kind id {kind_id}")


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """Values f(1..limit), stored 0-based but addressed 1-based via ``table[k]``."""

    kind: FunctionKind
    limit: int
    values: np.ndarray
    build_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.limit,):
            raise ValueError(f"expected {self.limit} values, got shape {self.values.shape}")
        self.values.setflags(write=False)

    def __getitem__(self, k: int):
        if isinstance(k, slice):
            raise TypeError("use table.values for slicing")
        if not 1 <= k <= self.limit:
            raise IndexError(f"index {k} outside 1..{self.limit}")
        return self.values[k - 1].item()

    def __len__(self) -> int:
        return self.limit

    def head(self, n: int) -> np.ndarray:
        """f(1..n) as a read-only view."""
        if not 1 <= n <= self.limit:
            raise IndexError(f"n = {n} outside 1..{self.limit}")
        return self.values[:n]

    def same_values(self, other: "FunctionTable") -> bool:
        return (
            self.kind.kind_id == other.kind.kind_id
            and self.limit == other.limit
            and self.values.dtype == other.values.dtype
            and self.values.tobytes() == other.values.tobytes()
        )

    @classmethod
    def from_values(cls, kind: FunctionKind, values, **meta) -> "FunctionTable":
        arr = np.array(values, dtype=kind.dtype if kind.name != "external" else None)
        if kind.name == "external" and arr.dtype.kind not in "if":
            raise TypeError("external tables need numeric values")
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a nonempty 1-d sequence")
        return cls(kind, arr.size, arr, dict(meta))


# --------------------------------------------------------------------------
# sieve


def simple_primes(limit: int) -> np.ndarray:
    """All primes <= limit (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@dataclass
class _Segment:
    """Factorisation summary of lo..hi-1."""

    lo: int
    big_omega: np.ndarray  # number of prime factors with multiplicity
    small_omega: np.ndarray  # distinct prime factors
    squarefree: np.ndarray
    tau: np.ndarray
    last_prime: np.ndarray  # largest prime factor (only meaningful for prime powers)


def _sieve_segment(lo: int, hi: int, base: np.ndarray) -> _Segment:
    size = hi - lo
    rem = np.arange(lo, hi, dtype=np.int64)
    big = np.zeros(size, dtype=np.int8)
    small = np.zeros(size, dtype=np.int8)
    sqfree = np.ones(size, dtype=bool)
    tau = np.ones(size, dtype=np.int32)
    lastp = np.ones(size, dtype=np.int64)

    for p in base.tolist():
        if p * p > hi - 1:
            break
        first = -(-lo // p) * p
        if first >= hi:
            continue
        idx = slice(first - lo, size, p)
        cnt = (hi - first + p - 1) // p
        e = np.ones(cnt, dtype=np.int8)
        # position j in the stride holds first + j*p; it is divisible by p^k
        # iff (first/p + j) is divisible by p^(k-1)
        q = first // p
        step = p
        while step <= (hi - 1) // p:
            start = (-q) % step
            e[start::step] += 1
            step *= p
        rem[idx] //= np.power(p, e.astype(np.int64))
        big[idx] += e
        small[idx] += 1
        sqfree[idx] &= e == 1
        tau[idx] *= (e + 1).astype(np.int32)
        lastp[idx] = p

    # what is left over is 1 or a single prime above sqrt(hi)
    leftover = rem > 1
    big[leftover] += 1
    small[leftover] += 1
    tau[leftover] *= 2
    lastp[leftover] = rem[leftover]
    return _Segment(lo, big, small, sqfree, tau, lastp)


def _segment_values(kind: FunctionKind, seg: _Segment) -> np.ndarray:
    n = seg.big_omega.size
    name = kind.name
    if name == "moebius":
        out = np.where(seg.small_omega % 2 == 0, 1, -1).astype(np.int8)
        out[~seg.squarefree] = 0
        return out
    if name == "liouville":
        return np.where(seg.big_omega % 2 == 0, 1, -1).astype(np.int8)
    if name == "squarefree":
        return seg.squarefree.astype(np.int8)
    if name == "squarefree-odd":
        return (seg.squarefree & (seg.small_omega % 2 == 1)).astype(np.int8)
    if name == "squarefree-even":
        return (seg.squarefree & (seg.small_omega % 2 == 0)).astype(np.int8)
    if name == "prime":
        return (seg.big_omega == 1).astype(np.int8)
    if name == "divisor-count":
        return seg.tau.copy()
    if name == "von-mangoldt":
        out = np.zeros(n, dtype=np.float64)
        pp = seg.small_omega == 1
        out[pp] = np.log(seg.last_prime[pp].astype(np.float64))
        return out
    if name == "prime-log":
        out = np.zeros(n, dtype=np.float64)
        pr = seg.big_omega == 1
        out[pr] = np.log(np.flatnonzero(pr).astype(np.float64) + seg.lo)
        return out
    raise ValueError(f"kind {kind} is not produced by the sieve")


def estimate_bytes(kinds, limit: int, segment_size: int, threads: int = 1) -> int:
    cells = sum(k.dtype.itemsize for k in kinds) * limit
    # rem/lastp int64, tau int32, three int8/bool arrays, per live segment
    workspace = segment_size * (8 + 8 + 4 + 3 + 8) * max(1, threads)
    return cells + workspace


def thread_budget(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("SUMFUNC_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def build_tables(
    kinds,
    limit: int,
    segment_size: int = DEFAULT_SEGMENT,
    threads: int | None = None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> dict[FunctionKind, FunctionTable]:
    """Build several tables from a single sieve pass."""
    kinds = list(dict.fromkeys(kinds))
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    if segment_size < 64:
        raise ValueError(f"segment_size must be >= 64, got {segment_size}")
    threads = thread_budget(threads)
    need = estimate_bytes(kinds, limit, segment_size, threads)
    if need > memory_budget:
        raise ResourceError(need, memory_budget)

    t0 = time.perf_counter()
    out = {k: np.empty(limit, dtype=k.dtype) for k in kinds}
    sieve_kinds = [k for k in kinds if k.name != "constant"]
    for k in kinds:
        if k.name == "constant":
            out[k][:] = k.constant
        elif k.name == "external":
            raise ValueError("external tables are not built by the sieve")

    if sieve_kinds:
        base = simple_primes(math.isqrt(limit))
        bounds = [(lo, min(lo + segment_size, limit + 1)) for lo in range(1, limit + 1, segment_size)]

        def work(bound):
            lo, hi = bound
            seg = _sieve_segment(lo, hi, base)
            for k in sieve_kinds:
                out[k][lo - 1 : hi - 1] = _segment_values(k, seg)

        if threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(threads) as pool:
                list(pool.map(work, bounds))
        else:
            for b in bounds:
                work(b)

    meta = {"segment_size": segment_size, "seconds": time.perf_counter() - t0}
    return {k: FunctionTable(k, limit, out[k], dict(meta)) for k in kinds}


def build_table(
    kind: FunctionKind,
    limit: int,
    segment_size: int = DEFAULT_SEGMENT,
    threads: int | None = None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> FunctionTable:
    """Exact table of ``kind`` on 1..limit.

    Output does not depend on ``segment_size`` or ``threads``.
    """
    return build_tables([kind], limit, segment_size, threads, memory_budget)[kind]


# --------------------------------------------------------------------------
# trial-division oracle


def trial_factor(k: int) -> dict[int, int]:
    """Prime factorisation of k by trial division."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    factors: dict[int, int] = {}
    d = 2
    while d * d <= k:
        while k % d == 0:
            factors[d] = factors.get(d, 0) + 1
            k //= d
        d += 1 if d == 2 else 2
    if k > 1:
        factors[k] = factors.get(k, 0) + 1
    return factors


def oracle_value(kind: FunctionKind, k: int):
    """f(k) from first principles; slow, independent of the sieve."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    name = kind.name
    if name == "external":
        raise ValueError("external tables have no oracle")
    if name == "constant":
        return kind.constant
    fac = trial_factor(k)
    exps = list(fac.values())
    squarefree = all(e == 1 for e in exps)
    if name == "moebius":
        return (-1) ** len(exps) if squarefree else 0
    if name == "liouville":
        return (-1) ** sum(exps)
    if name == "squarefree":
        return int(squarefree)
    if name == "squarefree-odd":
        return int(squarefree and len(exps) % 2 == 1)
    if name == "squarefree-even":
        return int(squarefree and len(exps) % 2 == 0)
    if name == "prime":
        return int(exps == [1])
    if name == "divisor-count":
        return math.prod(e + 1 for e in exps)
    if name == "von-mangoldt":
        return math.log(next(iter(fac))) if len(fac) == 1 else 0.0
    if name == "prime-log":
        return math.log(k) if exps == [1] else 0.0
    raise ValueError(f"no oracle for kind {kind}")


@dataclass
class VerificationReport:
    kind: FunctionKind
    checked: int
    mismatches: list[tuple[int, Any, Any]]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def _agrees(expected, got, integer: bool) -> bool:
    if integer:
        return expected == got
    return abs(expected - got) <= 1e-12 * max(abs(expected), 1e-300) or expected == got


def verify_table(
    table: FunctionTable, up_to: int, sample_count: int = 0, seed: int = 0
) -> VerificationReport:
    """Compare ``table`` against ``oracle_value``.

    Every k <= up_to is checked, plus ``sample_count`` uniformly drawn k in
    (up_to, limit].  All mismatches are listed as (k, expected, got).
    """
    if not 1 <= up_to <= table.limit:
        raise ValueError(f"up_to = {up_to} outside 1..{table.limit}")
    ks = list(range(1, up_to + 1))
    if sample_count and up_to < table.limit:
        rng = np.random.default_rng(seed)
        ks += rng.integers(up_to + 1, table.limit + 1, size=sample_count).tolist()
    integer = table.kind.integer
    mismatches = []
    for k in ks:
        expected = oracle_value(table.kind, k)
        got = table[k]
        if not _agrees(expected, got, integer):
            mismatches.append((k, expected, got))
    return VerificationReport(table.kind, len(ks), mismatches)
