"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from fractions import Fraction

from sumfunc.cache import IntegrityError, cache_load, cache_path, cache_store
from sumfunc.cli import main
from sumfunc.clt import (
    DEGENERATE_LIMIT_NOTE,
    SeriesSpec,
    alternating_report,
    alternating_series_table,
    clt_report,
    geometric,
    ks_normal,
    ks_normal_bruteforce,
    mean_decay_exponent,
    normality_report,
)
from sumfunc.distribution import (
    STANDARD_NORMAL,
    EmpiricalDistribution,
    empirical_charfun,
    empirical_value_distribution,
    ks_distance,
    limit_step_distribution,
    moment,
    taylor_check,
    value_distribution,
)
from sumfunc.experiments import EXPERIMENTS
from sumfunc.independence import (
    delta_closed_form,
    delta_exact,
    delta_grid,
    independence_report,
    mean_pair_product,
    mean_pair_product_bruteforce,
)
from sumfunc.sieve import (
    BUILTIN_KINDS,
    DIVISOR_COUNT,
    LIOUVILLE,
    MOEBIUS,
    PRIME_LOG,
    SQUAREFREE,
    VON_MANGOLDT,
    FunctionTable,
    build_table,
    build_tables,
    constant,
    external,
    verify_table,
)
from sumfunc.summatory import log_grid, prefix_series

N = 10**7
DECADES = log_grid(10**3, N, 10)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_criterion_01_sieve_exactness(acceptance_line):
    t0 = time.perf_counter()
    tables = build_tables(BUILTIN_KINDS + (constant(1),), N)
    mismatches = {}
    for kind, table in tables.items():
        rep = verify_table(table, 10**5, 10**4, seed=1)
        assert rep.checked == 10**5 + 10**4
        mismatches[str(kind)] = len(rep.mismatches)
    seconds = time.perf_counter() - t0
    ok = sum(mismatches.values()) == 0 and seconds < 60
    acceptance_line(1, ok, f"{len(tables)} kinds, {sum(mismatches.values())} mismatches, {seconds:.1f} s (< 60 s)")
    assert ok, (mismatches, seconds)


def test_criterion_02_pairwise_identity(small_tables, acceptance_line):
    worst_mean = worst_delta = 0.0
    for kind in (MOEBIUS, LIOUVILLE, DIVISOR_COUNT):
        t = small_tables[kind]
        for n in (10, 100, 500, 2000):
            brute = mean_pair_product_bruteforce(t, n)
            fast = mean_pair_product(t, n)
            worst_mean = max(worst_mean, _rel(fast, brute) if brute else abs(fast))
            a, b = float(delta_exact(t, n)), float(delta_closed_form(t, n))
            worst_delta = max(worst_delta, _rel(a, b) if b else abs(a))
    ok = worst_mean <= 1e-12 and worst_delta <= 1e-12
    acceptance_line(2, ok, f"max rel. error: pair mean {worst_mean:.1e}, delta {worst_delta:.1e} (<= 1e-12)")
    assert ok


def test_criterion_03_bounded_decay(big_tables, acceptance_line):
    slopes = {}
    for kind in (MOEBIUS, LIOUVILLE):
        rep = independence_report(big_tables[kind], DECADES)
        slopes[str(kind)] = rep.slope
    ok = all(abs(s + 2.0) <= 0.15 for s in slopes.values())
    detail = ", ".join(f"{k} slope {s:.4f}" for k, s in slopes.items())
    acceptance_line(3, ok, f"{detail} (target -2.0 +- 0.15)")
    assert ok


def test_criterion_04_constant_one(acceptance_line):
    table = build_table(constant(1), N)
    g = delta_grid(table, DECADES)
    exact = all(delta_exact(table, int(n)) == Fraction(1, int(n)) for n in DECADES)
    floats = bool(np.array_equal(g["delta"], 1.0 / DECADES))
    rep = independence_report(table, DECADES)
    ok = exact and floats and abs(rep.slope + 1.0) <= 1e-9
    acceptance_line(4, ok, f"delta = 1/n on {DECADES.size} checkpoints: {exact}; slope {rep.slope:.12f} (-1 +- 1e-9)")
    assert ok


def test_criterion_05_divisor_count_vanishing(big_tables, acceptance_line):
    t = big_tables[DIVISOR_COUNT]
    d2, d4, d7 = (abs(float(delta_exact(t, n))) for n in (10**2, 10**4, 10**7))
    ok = d7 < d4 < d2 and d7 < 1e-3
    acceptance_line(5, ok, f"|delta|: 1e2 {d2:.3e}, 1e4 {d4:.3e}, 1e7 {d7:.3e} (decreasing, final < 1e-3)")
    assert ok


def test_criterion_06_densities(big_tables, acceptance_line):
    q = float(prefix_series(big_tables[SQUAREFREE], [N]).sums[0]) / N
    psi = float(prefix_series(big_tables[VON_MANGOLDT], [N]).sums[0]) / N
    theta = float(prefix_series(big_tables[PRIME_LOG], [N]).sums[0]) / N
    mu = empirical_value_distribution(big_tables[MOEBIUS], N)
    lam = empirical_value_distribution(big_tables[LIOUVILLE], N)
    c = 3 / math.pi**2
    mu_err = max(abs(mu.frequency_of(-1) - c), abs(mu.frequency_of(0) - (1 - 2 * c)), abs(mu.frequency_of(1) - c))
    lam_err = max(abs(lam.frequency_of(-1) - 0.5), abs(lam.frequency_of(1) - 0.5))
    errs = {
        "Q/N": (abs(q - 6 / math.pi**2), 1e-3),
        "mu freq": (mu_err, 1e-3),
        "lambda freq": (lam_err, 1e-3),
        "psi/N": (abs(psi - 1), 5e-3),
        "theta/N": (abs(theta - 1), 5e-3),
    }
    ok = all(e < tol for e, tol in errs.values())
    acceptance_line(6, ok, ", ".join(f"{k} err {e:.2e} (< {tol:g})" for k, (e, tol) in errs.items()))
    assert ok


def test_criterion_07_limit_law_ks(big_tables, acceptance_line):
    ks = {}
    for kind in (MOEBIUS, LIOUVILLE):
        emp = empirical_value_distribution(big_tables[kind], N)
        ks[str(kind)] = ks_distance(emp, limit_step_distribution(kind))
    ok = all(v <= 1e-3 for v in ks.values())
    acceptance_line(7, ok, ", ".join(f"{k} KS {v:.2e}" for k, v in ks.items()) + " (<= 1e-3)")
    assert ok


def test_criterion_08_taylor(big_tables, acceptance_line):
    n = 10**6
    lam = big_tables[LIOUVILLE]
    values = lam.head(n)
    moments = [moment(lam, n, 1), moment(lam, n, 2)]
    t = np.linspace(-0.3, 0.3, 61)
    rep = taylor_check(empirical_charfun(values, t), moments, 2)
    fine = np.concatenate((np.geomspace(1e-3, 1e-1, 41), -np.geomspace(1e-3, 1e-1, 41)))
    profile = taylor_check(empirical_charfun(values, fine), moments, 2).ratio_profile(1e-3, [1e-1, 3e-2, 1e-2, 3e-3])
    shrinks = all(a > b for a, b in zip(profile, profile[1:]))
    ok = rep.max_abs <= 2e-3 and shrinks
    prof = ", ".join(f"{p:.3e}" for p in profile)
    acceptance_line(8, ok, f"max|r| {rep.max_abs:.3e} (<= 2e-3); max|r|/t^2 by upper bound 1e-1..3e-3: {prof}")
    assert ok


def _brute_two_sample(a, b):
    pts = np.union1d(a, b)
    fa = (a[None, :] <= pts[:, None]).sum(axis=1) / a.size
    fb = (b[None, :] <= pts[:, None]).sum(axis=1) / b.size
    la = (a[None, :] < pts[:, None]).sum(axis=1) / a.size
    lb = (b[None, :] < pts[:, None]).sum(axis=1) / b.size
    return float(max(np.abs(fa - fb).max(), np.abs(la - lb).max()))


def _exact_law(z):
    # real samples are binned by value_distribution; keep the exact support here
    support, counts = np.unique(z, return_counts=True)
    return EmpiricalDistribution(support, counts, z.size)


def test_criterion_09_ks_oracle(acceptance_line):
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(100):
        m = int(rng.integers(1, 501))
        span = int(rng.integers(1, 40))
        ints = rng.integers(-span, span + 1, size=m)
        z = ints * float(rng.uniform(0.05, 0.5))
        other = rng.integers(-span, span + 1, size=int(rng.integers(1, 501)))
        brute = ks_normal_bruteforce(z)
        checks = (
            ks_normal(z) == brute,
            normality_report(z, 1.0).ks == brute,
            ks_distance(_exact_law(z), STANDARD_NORMAL) == brute,
            ks_distance(value_distribution(ints), value_distribution(other)) == _brute_two_sample(ints, other),
        )
        bad += not all(checks)
    ok = bad == 0
    acceptance_line(9, ok, f"100 seeded discrete samples, {bad} disagreements with the O(m^2) sup (exact)")
    assert ok


def _iid_signs(n, seed=0):
    vals = np.random.default_rng(seed).choice(np.array([-1, 1], dtype=np.int8), size=n)
    return FunctionTable(external(f"random-sign seed={seed}", integer=True), n, vals)


def test_criterion_10_clt_control(acceptance_line):
    n = 10**6
    rep = clt_report(_iid_signs(n), n, "A", 0.5)
    const = clt_report(build_table(constant(1), n), n, "A", 0.5)
    ok = rep.ks <= 0.05 and const.verdict == "degenerate"
    acceptance_line(
        10, ok, f"i.i.d. +-1 variant-A trailing-window KS {rep.ks:.4f} (<= 0.05); constant verdict {const.verdict}"
    )
    assert const.verdict == "degenerate"
    assert rep.ks <= 0.05


def test_criterion_10_constant_part_is_degenerate():
    for variant in ("A", "B"):
        assert clt_report(build_table(constant(1), 10**6), 10**6, variant).verdict == "degenerate"


def test_criterion_11_mertens_gap(big_tables, acceptance_line):
    md = mean_decay_exponent(big_tables[MOEBIUS], DECADES)
    ok = -0.75 < md.slope < -0.25 and not md.condition_holds and "fails" in md.verdict
    acceptance_line(11, ok, f"mu mean-gap slope {md.slope:.4f} in (-0.75, -0.25); verdict: {md.verdict}")
    assert ok


def test_criterion_12_alternating(acceptance_line):
    spec = SeriesSpec(geometric(1, Fraction(1, 2)), geometric(-2, Fraction(1, 3)))
    table, _ = alternating_series_table(spec, 2)
    s2 = float(np.sum(table.values))
    rep = alternating_report(spec, 10**4)
    flagged = rep["report"]["degenerate"] and DEGENERATE_LIMIT_NOTE in rep["report"]["notes"]
    ok = abs(s2 + 5 / 36) <= 1e-15 and flagged
    acceptance_line(12, ok, f"S(2) = {s2!r} (-5/36 within 1e-15); degeneracy flag at n = 1e4: {flagged}")
    assert ok


def test_criterion_13_cache(big_tables, tmp_path, acceptance_line):
    table = big_tables[MOEBIUS]
    path = cache_store(table, tmp_path)
    back = cache_load(MOEBIUS, N, tmp_path)
    identical = back.values.tobytes() == table.values.tobytes() and back.limit == N
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    path.write_bytes(bytes(raw))
    try:
        cache_load(MOEBIUS, N, tmp_path)
        detected = False
    except IntegrityError:
        detected = True
    ok = identical and detected and path == cache_path(MOEBIUS, N, tmp_path)
    acceptance_line(13, ok, f"1e7 mu round-trip identical: {identical}; flipped byte detected: {detected}")
    assert ok


_DETERMINISM_ARGS = {
    "independence": ["--kind", "divisor-count", "--limit", "1000000"],
    "density": ["--kind", "psi", "--limit", "1000000"],
    "distribution": ["--kind", "moebius", "--limit", "1000000", "--tolerance", "0.01"],
    "charfun": ["--kind", "liouville", "--limit", "1000000"],
    "taylor": ["--kind", "liouville", "--limit", "1000000"],
    "clt": ["--kind", "liouville", "--limit", "1000000", "--seed", "5"],
    "alternating": ["--limit", "10000"],
    "mertens-gap": ["--kind", "moebius", "--limit", "1000000"],
}


def test_criterion_14_determinism(tmp_path, monkeypatch, acceptance_line):
    differing = []
    for exp in EXPERIMENTS:
        outputs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("SUMFUNC_THREADS", threads)
            out = tmp_path / exp / threads
            code = main(["run", "--experiment", exp, "--out", str(out), *_DETERMINISM_ARGS[exp]])
            assert code in (0, 1)
            files = sorted(p for p in out.iterdir() if p.name != "manifest.json")
            outputs.append({p.name: p.read_bytes() for p in files})
        if outputs[0] != outputs[1] or not outputs[0]:
            differing.append(exp)
    ok = not differing
    acceptance_line(14, ok, f"{len(EXPERIMENTS)} experiments, threads 1 vs 4; differing: {differing or 'none'}")
    assert ok
