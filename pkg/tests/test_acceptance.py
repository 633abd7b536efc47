"""Acceptance criteria.  Each test prints one ``CRITERION n ... PASS|FAIL`` line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import math
import random
import sys
import time
from fractions import Fraction

import pytest

from periodsieve.arith import QuadRational, fundamental_discriminants, make_field
from periodsieve.oracle import exact_period, find_periodic_points, preperiodic_closure
from periodsieve.periods import possible_periods
from periodsieve.residue import INFINITY, first_primes, primes_above, primes_up_to, reduce_c
from periodsieve.search import CONFIRMED, COUNTEREXAMPLE, SearchConfig, run_verification
from periodsieve.sieve import sieve_stats

F = Fraction

TABLE_BAD = [1, 2, 5, 13, 40, 98, 199, 862, 1699, 4893]
TABLE_TOTAL = [3, 12, 72, 576, 6912, 96768, 1741824, 34836480, 836075520, 25082265600]


_capsys = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def emit(n, title, ok, detail):
    line = f"CRITERION {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    with _capsys.disabled():
        print("\n" + line)
    assert ok, line


def field_runs(M):
    out = {}
    for D in fundamental_discriminants(-40, 40):
        out[D] = run_verification(SearchConfig(field=D, B=100, M=M))
    return out


def test_c01_sieve_table():
    t = time.time()
    rows = sieve_stats(None, 3, 10)
    secs = time.time() - t
    bad = [r[1] for r in rows]
    total = [r[2] for r in rows]
    ok = bad == TABLE_BAD and total == TABLE_TOTAL and secs < 600
    diff = [(N + 1, b, e) for N, (b, e) in enumerate(zip(bad, TABLE_BAD)) if b != e]
    emit(1, "sieve table", ok,
         f"totals {'match' if total == TABLE_TOTAL else 'differ'}; "
         f"bad-type mismatches (N, got, expected) {diff}; {secs:.1f}s")


def test_c02_rational_desk_scale():
    t = time.time()
    rep = run_verification(SearchConfig(field=0, B=10**4, M=3))
    secs = time.time() - t
    confirmed = rep.by_verdict(CONFIRMED)
    ok = (
        rep.counts[COUNTEREXAMPLE] == 0
        and rep.complete
        and rep.exit_code == 0
        and all(len(cy) <= 3 for r in confirmed for cy in r["certified_cycles"])
        and secs < 600
    )
    emit(2, "Q, B=10^4, M=3", ok,
         f"counterexamples={rep.counts[COUNTEREXAMPLE]}, oracle cases={len(confirmed)}, "
         f"max primes={rep.summary['max_primes_used']}, {secs:.1f}s")


@pytest.fixture(scope="module")
def runs_m6():
    return field_runs(6)


@pytest.fixture(scope="module")
def runs_m7():
    return field_runs(7)


def _confirmed(runs):
    return [(D, r) for D, rep in runs.items() for r in rep.by_verdict(CONFIRMED)]


def test_c03_field_desk_scale(runs_m6):
    bad = [D for D, rep in runs_m6.items() if rep.counts[COUNTEREXAMPLE] or not rep.complete]
    hit = [r for D, r in _confirmed(runs_m6) if D == 33 and r["c"] == "-71/48+0/1*w"]
    six = bool(hit) and any(len(cy) == 6 for cy in hit[0]["certified_cycles"])
    ok = len(runs_m6) == 26 and not bad and six
    emit(3, "|D|<=40, B=100, M=6", ok,
         f"{len(runs_m6)} fields, counterexample fields={bad}, -71/48 over D=33 Confirmed(6)={six}")


def test_c04_known_cycles():
    K = make_field(33)
    c3 = find_periodic_points(F(-29, 16))
    ok3 = [set(cy) for cy in c3.cycles] == [{F(-1, 4), F(-7, 4), F(5, 4)}]
    s = QuadRational(-1, 2, K)
    want6 = {F(-1, 4) + s / 6, F(-1, 4) - s / 6, F(-1, 2) - s / 12, F(-1, 2) + s / 12, -1 + s / 12, -1 - s / 12}
    c6 = find_periodic_points(F(-71, 48), field=K)
    ok6 = [set(cy) for cy in c6.cycles] == [want6]
    reiter = all(
        exact_period(cert.c, z, cert.field) == len(cy) for cert in (c3, c6) for cy in cert.cycles for z in cy
    )
    emit(4, "known cycles", ok3 and ok6 and reiter, f"3-cycle={ok3}, 6-cycle={ok6}, re-iterated={reiter}")


def test_c05_preperiodic_counts():
    q = preperiodic_closure(F(-29, 16)).to_json()
    k = preperiodic_closure(F(-29, 16), field=make_field(17)).to_json()
    ok = (q["preperiodic_affine"], q["preperiodic_with_infinity"]) == (8, 9) and k["preperiodic_with_infinity"] >= 15
    emit(5, "preperiodic counts", ok,
         f"Q: {q['preperiodic_affine']} affine + inf = {q['preperiodic_with_infinity']}; "
         f"Q(sqrt 17): {k['preperiodic_with_infinity']} with inf")


def test_c06_sieve_sharpness():
    K = make_field(-3)
    c = QuadRational(F(1, 4), F(1, 4), K)
    good = []
    for p in first_primes(25):
        for P in primes_above(K, p):
            x = reduce_c(c, P)
            if x is not INFINITY:
                good.append((P, possible_periods(P, x)))
    contains = all(1 in s and 6 in s for _, s in good)
    periods = find_periodic_points(c).periods
    ok = contains and periods == {1}
    emit(6, "sieve sharpness", ok,
         f"{{1,6}} in PosPer at all {len(good)} good primes={contains}; oracle periods={sorted(periods)}")


def test_c07_soundness_suite():
    rng = random.Random(20260101)
    pool = primes_up_to(200)
    checks = exceptions = nonvacuous = 0
    for i in range(1000):
        while True:
            q = rng.randint(1, 22) ** 2
            p = rng.randint(-500, 500)
            if q <= 500 and math.gcd(p, q) == 1:
                break
        c = F(p, q)
        cert = find_periodic_points(c)
        nonvacuous += bool(cert.cycles)
        good = [P for P in (primes_above(None, r)[0] for r in pool) if q % P.p]
        for P in rng.sample(good, 5):
            s = possible_periods(P, reduce_c(c, P))
            for n in cert.periods:
                checks += 1
                exceptions += n not in s
    emit(7, "soundness (1000 random c)", exceptions == 0,
         f"exceptions={exceptions}, period checks={checks}, c with periodic points={nonvacuous}")


def _brute_square_count(B):
    return sum(
        1
        for s in range(1, math.isqrt(B) + 1)
        for p in range(-B, B + 1)
        if math.gcd(p, s * s) == 1
    )


def test_c08_survivor_counts():
    parts, ok = [], True
    for B in (100, 1000):
        got = run_verification(SearchConfig(field=0, B=B)).summary["passed_filter"]
        want = _brute_square_count(B)
        ratio = got / B**1.5
        ok &= got == want and 1 <= ratio <= 3
        parts.append(f"B={B}: {got} (brute {want}), ratio {ratio:.3f}")
    emit(8, "survivor counts", ok, "; ".join(parts))


def test_c09_determinism(tmp_path):
    base = dict(field=-3, B=24, block_size=3000)
    blobs = {}
    for k in (1, 4, 8):
        blobs[f"workers={k}"] = run_verification(SearchConfig(**base, workers=k)).to_jsonl()
    ck = str(tmp_path / "ck.jsonl")
    n = run_verification(SearchConfig(**base, checkpoint=ck), block_limit=0).header["blocks"]
    half = run_verification(SearchConfig(**base, checkpoint=ck), block_limit=n // 2)
    resumed = run_verification(SearchConfig(**base, checkpoint=ck, workers=4)).to_jsonl()
    blobs["resumed"] = resumed
    ref = blobs["workers=1"]
    same = all(b == ref for b in blobs.values())
    emit(9, "determinism", same and not half.complete,
         f"{n} blocks, interrupted after {n // 2}; identical across {sorted(blobs)}={same}")


def test_c10_no_period_five(runs_m7):
    rep_q = run_verification(SearchConfig(field=0, B=10**4, M=7))
    fives = [
        (D, r["c"]) for D, rep in list(runs_m7.items()) + [(0, rep_q)]
        for r in rep.by_verdict(CONFIRMED) if any(len(cy) == 5 for cy in r["certified_cycles"])
    ]
    sixes = [
        (D, r["c"]) for D, r in _confirmed(runs_m7) + [(0, r) for r in rep_q.by_verdict(CONFIRMED)]
        if any(len(cy) == 6 for cy in r["certified_cycles"])
    ]
    cex = sum(rep.counts[COUNTEREXAMPLE] for rep in list(runs_m7.values()) + [rep_q])
    ok = not fives and sixes == [(33, "-71/48+0/1*w")] and cex == 0
    emit(10, "no period 5 at M=7", ok, f"period-5 cases={fives}, period-6 cases={sixes}, counterexamples={cex}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
