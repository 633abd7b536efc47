from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from periodsieve.arith import QuadRational, make_field
from periodsieve.periods import possible_periods
from periodsieve.residue import INFINITY, ResidueElem, primes_above
from periodsieve.sieve import (
    SType,
    brute_force_bad,
    build_prime_table,
    build_sieve,
    get_sieve,
    load_sieve,
    sieve_primes,
    sieve_stats,
    stype_of,
    total_types,
    type_from_key,
    type_key,
)


def rat(p):
    return primes_above(None, p)[0]


def test_prime_table_examples():
    t2 = build_prime_table(rat(2))
    assert [s.values for s in t2[:2]] == [(1,), (2,)] and t2[2].is_all
    assert build_prime_table(rat(3))[0].values == (1, 2, 6)


def test_small_sieves():
    assert build_sieve([rat(2)], 3).bad == {2}
    s = build_sieve([rat(2), rat(3)], 3)
    assert len(s.bad) == 2 and s.total == 12


def test_build_sieve_rejects_empty():
    with pytest.raises(ValueError):
        build_sieve([], 3)


def test_stype_examples():
    S = sieve_primes(None, 3)
    T = stype_of(Fraction(-29, 16), S)
    assert T.coords[0] is INFINITY
    assert [x.u0 for x in T.coords[1:]] == [1, 1]
    assert all(x.u0 == 0 for x in stype_of(Fraction(0), S).coords)
    K = make_field(-3)
    (P7,) = [P for P in primes_above(K, 7) if P.t == 3]
    assert stype_of(QuadRational(Fraction(1, 4), Fraction(1, 4), K), [P7]).coords[0] == ResidueElem(P7, 1)


def test_type_key_examples():
    S1 = [rat(2)]
    keys = [type_key(SType((x,)), S1) for x in (ResidueElem(rat(2), 0), ResidueElem(rat(2), 1), INFINITY)]
    assert keys == [0, 1, 2]
    S2 = [rat(2), rat(3)]
    assert type_key(SType((ResidueElem(rat(2), 1), INFINITY)), S2) == 10


@given(st.sampled_from([0, -3, -4, 5, 33, -7, 8]), st.integers(1, 3), st.data())
def test_type_key_round_trip(D, N, data):
    S = sieve_primes(make_field(D) if D else None, N)
    key = data.draw(st.integers(0, total_types(S) - 1))
    T = type_from_key(key, S)
    assert type_key(T, S) == key


@pytest.mark.parametrize("D", [0, -3, -4, 5, 33, -15, 40])
@pytest.mark.parametrize("M", [2, 3, 6])
def test_incremental_matches_brute_force(D, M):
    for N in range(1, 5):
        S = sieve_primes(make_field(D) if D else None, N)
        if total_types(S) > 300_000:
            break
        assert build_sieve(S, M).bad == brute_force_bad(S, M)


def test_bad_types_agree_with_posper():
    S = sieve_primes(None, 3)
    table = build_sieve(S, 3)
    for key in range(table.total):
        T = type_from_key(key, S)
        m = -1
        for P, x in zip(S, T.coords):
            m &= possible_periods(P, x).mask
        assert table.is_bad(T) == (m >> 4 != 0)
        assert table.posper(T).mask == m


def test_sieve_stats_totals():
    rows = sieve_stats(None, 3, 10)
    assert [r[2] for r in rows] == [
        3, 12, 72, 576, 6912, 96768, 1741824, 34836480, 836075520, 25082265600,
    ]
    assert [r[1] for r in rows[:3]] == [1, 2, 5]
    # the bad-type count never grows faster than the product
    for (_, b0, t0, _), (_, b1, t1, _) in zip(rows, rows[1:]):
        assert b1 <= b0 * (t1 // t0)


def _conjugate_type(T, S):
    out = list(T.coords)
    for i, P in enumerate(S):
        x = T.coords[i]
        if P.kind == "split":
            j = next(k for k, Q in enumerate(S) if Q.p == P.p and Q.index != P.index)
            y = T.coords[j]
            out[i] = y if y is INFINITY else ResidueElem(P, y.u0)
        elif P.kind == "inert" and x is not INFINITY:
            out[i] = ResidueElem(P, x.u0 + P.a * x.u1, -x.u1)
    return SType(tuple(out))


@pytest.mark.parametrize("D", [-7, 33, -4])
def test_bad_types_closed_under_conjugation(D):
    K = make_field(D)
    S = sieve_primes(K, 3)
    table = build_sieve(S, 6)
    assert table.bad
    for key in table.bad:
        assert table.is_bad(_conjugate_type(type_from_key(key, S), S))


def test_cache_round_trip(tmp_path):
    K = make_field(33)
    S = sieve_primes(K, 3)
    path = tmp_path / "s.bin"
    t = get_sieve(K, S, 6, path)
    assert path.exists()
    again = load_sieve(path, K, S, 6)
    assert again.bad == t.bad and (again.dense == t.dense).all()
    assert load_sieve(path, K, S, 5) is None
    assert load_sieve(path, make_field(-3), S, 6) is None
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    assert load_sieve(path, K, S, 6) is None
    assert get_sieve(K, S, 6, path).bad == t.bad


def test_cache_missing_file(tmp_path):
    assert load_sieve(tmp_path / "none.bin", None, sieve_primes(None, 2), 3) is None
