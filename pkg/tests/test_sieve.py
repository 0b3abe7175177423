import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumfunc.sieve import (
    BUILTIN_KINDS,
    DIVISOR_COUNT,
    LIOUVILLE,
    MOEBIUS,
    PRIME,
    PRIME_LOG,
    SQUAREFREE,
    SQUAREFREE_EVEN,
    SQUAREFREE_ODD,
    VON_MANGOLDT,
    FunctionTable,
    ResourceError,
    build_table,
    build_tables,
    constant,
    kind_from_name,
    oracle_value,
    trial_factor,
    verify_table,
)


def test_moebius_first_six():
    assert build_table(MOEBIUS, 6, 64).values.tolist() == [1, -1, -1, 0, -1, 1]


def test_liouville_first_four():
    assert build_table(LIOUVILLE, 4, 64).values.tolist() == [1, -1, -1, 1]


def test_divisor_count_of_twelve():
    expected = sum(1 for d in range(1, 13) if 12 % d == 0)
    table = build_table(DIVISOR_COUNT, 12, 64)
    assert table[12] == expected == 6


@pytest.mark.parametrize(
    "kind, k, expected",
    [(MOEBIUS, 30, -1), (PRIME, 9, 0), (LIOUVILLE, 4, 1), (DIVISOR_COUNT, 1, 1), (SQUAREFREE, 1, 1), (PRIME, 1, 0)],
)
def test_oracle_values(kind, k, expected):
    assert oracle_value(kind, k) == expected


def test_oracle_von_mangoldt_prime_power():
    assert oracle_value(VON_MANGOLDT, 8) == pytest.approx(0.6931471805599453, rel=1e-15)
    assert oracle_value(VON_MANGOLDT, 1) == 0.0
    assert oracle_value(VON_MANGOLDT, 12) == 0.0


def test_oracle_rejects_zero():
    with pytest.raises(ValueError):
        oracle_value(MOEBIUS, 0)
    with pytest.raises(ValueError):
        trial_factor(0)


def test_trial_factor():
    assert trial_factor(360) == {2: 3, 3: 2, 5: 1}
    assert trial_factor(9999991) == {9999991: 1}


def test_small_tables_match_oracle_exhaustively(small_tables):
    for kind, table in small_tables.items():
        rep = verify_table(table, table.limit)
        assert rep.passed, (kind, rep.mismatches[:5])


def test_verify_reports_exactly_the_corrupted_cell():
    good = build_table(MOEBIUS, 200, 64)
    vals = good.values.copy()
    vals[96] = 1  # f(97) is -1
    bad = FunctionTable(MOEBIUS, 200, vals)
    rep = verify_table(bad, 200)
    assert rep.mismatches == [(97, -1, 1)]
    assert not rep.passed


def test_verify_sampling_beyond_exhaustive_range():
    table = build_table(LIOUVILLE, 10**5)
    rep = verify_table(table, 1000, 200, seed=3)
    assert rep.passed and rep.checked == 1200


@pytest.mark.parametrize("kind", BUILTIN_KINDS, ids=str)
def test_value_domains(kind, small_tables):
    v = small_tables[kind].values
    if kind is MOEBIUS:
        assert set(np.unique(v)) <= {-1, 0, 1}
    elif kind is LIOUVILLE:
        assert set(np.unique(v)) == {-1, 1}
    elif kind in (SQUAREFREE, PRIME, SQUAREFREE_ODD, SQUAREFREE_EVEN):
        assert set(np.unique(v)) == {0, 1}
    elif kind is DIVISOR_COUNT:
        assert v.min() >= 1
    else:
        assert v.min() >= 0


def test_real_kinds_against_logs(small_tables):
    vm = small_tables[VON_MANGOLDT]
    pl = small_tables[PRIME_LOG]
    assert vm[1] == 0.0 and pl[1] == 0.0
    assert vm[27] == pytest.approx(math.log(3), rel=1e-12)
    assert pl[27] == 0.0
    assert pl[4999] == pytest.approx(math.log(4999), rel=1e-12)


def test_moebius_squared_is_squarefree_and_liouville_agrees_where_squarefree(small_tables):
    mu = small_tables[MOEBIUS].values.astype(int)
    lam = small_tables[LIOUVILLE].values.astype(int)
    sq = small_tables[SQUAREFREE].values.astype(int)
    assert np.array_equal(mu * mu, sq)
    assert np.array_equal(lam[mu != 0], mu[mu != 0])
    q1 = small_tables[SQUAREFREE_ODD].values.astype(int)
    q2 = small_tables[SQUAREFREE_EVEN].values.astype(int)
    assert np.array_equal(q1, (mu == -1).astype(int))
    assert np.array_equal(q2, (mu == 1).astype(int))


@pytest.fixture(scope="module")
def mult_tables():
    return build_tables([MOEBIUS, LIOUVILLE, DIVISOR_COUNT], 10**6)


@settings(max_examples=300, deadline=None)
@given(a=st.integers(1, 1000), b=st.integers(1, 1000))
def test_multiplicativity(mult_tables, a, b):
    if math.gcd(a, b) != 1:
        return
    for kind in (MOEBIUS, LIOUVILLE, DIVISOR_COUNT):
        t = mult_tables[kind]
        assert t[a * b] == t[a] * t[b]


@settings(max_examples=25, deadline=None)
@given(segment=st.integers(64, 5000), limit=st.integers(1, 4000))
def test_segment_size_does_not_change_tables(segment, limit):
    ref = build_tables(BUILTIN_KINDS, limit, 1 << 16)
    other = build_tables(BUILTIN_KINDS, limit, segment)
    for kind in BUILTIN_KINDS:
        assert ref[kind].same_values(other[kind]), kind


def test_threads_do_not_change_tables():
    one = build_table(VON_MANGOLDT, 200_000, 4096, threads=1)
    four = build_table(VON_MANGOLDT, 200_000, 4096, threads=4)
    assert one.same_values(four)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_table(MOEBIUS, 0)
    with pytest.raises(ValueError):
        build_table(MOEBIUS, 100, 63)


def test_memory_budget_names_required_bytes():
    with pytest.raises(ResourceError) as err:
        build_table(DIVISOR_COUNT, 10**8, memory_budget=10**6)
    assert err.value.required > 4 * 10**8
    assert str(err.value.required) in str(err.value)


def test_table_is_one_indexed_and_immutable():
    t = build_table(MOEBIUS, 10, 64)
    with pytest.raises(IndexError):
        t[0]
    with pytest.raises(IndexError):
        t[11]
    with pytest.raises(ValueError):
        t.values[0] = 5


def test_constant_kind():
    t = build_table(constant(1), 7)
    assert t.values.tolist() == [1] * 7
    assert oracle_value(constant(3), 99) == 3


@pytest.mark.parametrize("name, kind", [("mu", MOEBIUS), ("Liouville", LIOUVILLE), ("tau", DIVISOR_COUNT), ("psi", VON_MANGOLDT)])
def test_kind_names(name, kind):
    assert kind_from_name(name) is kind


def test_kind_names_constant_and_unknown():
    assert kind_from_name("constant:2").constant == 2
    with pytest.raises(ValueError):
        kind_from_name("totient")
