import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from apollonian.descartes import PRESETS
from apollonian.enumerate import iter_orbit
from apollonian.primes import (
    EULER_GAMMA,
    PrimeTable,
    PrimeTableTooSmall,
    almost_prime_count,
    c_k0,
    count_prime_vectors,
    divisor_count,
    h_from_g,
    mertens_product,
    omega,
    segmented_sieve,
    selberg_main_term,
    sieve_report,
    squarefree_h,
    sum_k_omega,
    tau3,
)

from oracles import is_prime

STRIP = PRESETS["strip3d"]


@pytest.fixture(scope="module")
def table():
    return PrimeTable(10**6)


def test_self_test(table):
    assert table.self_test()


def test_segmented_sieve_segments_agree():
    a = segmented_sieve(100_003, segment=1000)
    b = segmented_sieve(100_003)
    assert (a == b).all()
    assert int(a.sum()) == sympy.primepi(100_003)
    assert list(segmented_sieve(1)) == [0, 0]


def test_factor_counts(table):
    for n in range(2, 3000):
        f = sympy.factorint(n)
        assert table.omega[n] == len(f)
        assert table.bigomega[n] == sum(f.values())


def test_prime_fixtures():
    t = PrimeTable(200)
    assert count_prime_vectors([(2, 3, 5, 7, 11)], t, k=5) == 1
    for k in range(1, 6):
        assert count_prime_vectors([(0, 0, 1, 1, 1)], t, k=k) == 0
    assert count_prime_vectors([(-3, 4, 6, 8, 9)], t, k=1) == 1
    assert almost_prime_count([(4, 9, 25, 49, 121)], t, k=5, r=2) == 1
    assert almost_prime_count([(4, 9, 25, 49, 121)], t, k=5, r=1) == 0
    with pytest.raises(PrimeTableTooSmall):
        count_prime_vectors([(0, 0, 1, 1, 1000)], t, k=1)
    with pytest.raises(ValueError):
        almost_prime_count([(4, 9, 25, 49, 121)], t, k=5, r=0)


def test_orbit_prime_counts(table):
    vecs = list(iter_orbit(STRIP, 1000))
    direct = sum(sum(map(is_prime, v)) >= 1 for v in vecs[:20000])
    assert count_prime_vectors(vecs[:20000], table, k=1) == direct
    counts = [count_prime_vectors(vecs, table, k=k) for k in range(1, 6)]
    assert counts == sorted(counts, reverse=True)
    small = [v for v in vecs if max(map(abs, v)) < 500]
    assert count_prime_vectors(small, table, k=1) <= counts[0]
    # frozen from the census scan at T = 1000
    assert len(vecs) == 4333440
    assert counts[0] == 3377644
    ratio = counts[0] * math.log(1000) / len(vecs)
    assert 1 < ratio < 10
    assert almost_prime_count(vecs, table, k=2, r=3) >= counts[1]


def test_new_coordinate_mode(table):
    vecs = list(iter_orbit(STRIP, 100))
    want = sum(is_prime(max(v)) for v in vecs if v != STRIP)
    assert count_prime_vectors(vecs, table, mode="new", root=STRIP) == want


def test_almost_prime_limits(table):
    vecs = list(iter_orbit(STRIP, 300))
    for k in (1, 2, 3):
        big = almost_prime_count(vecs, table, k, r=40)
        assert big == sum(sum(abs(x) > 1 for x in v) >= k for v in vecs)
        assert almost_prime_count(vecs, table, k, r=1) == count_prime_vectors(vecs, table, k)


def test_h_from_g():
    for p in (2, 3, 7, 101):
        assert h_from_g(Fraction(1, p)) == Fraction(1, p - 1)
    assert h_from_g(0) == 0
    assert h_from_g(Fraction(2, 7)) == Fraction(2, 5)
    with pytest.raises(ValueError):
        h_from_g(1)


def test_h_multiplicative():
    h = dict(squarefree_h(lambda p: Fraction(2, p), 2000, good=set(sympy.primerange(3, 2000)), exact=True))
    keys = sorted(h)
    for a in keys[:60]:
        for b in keys[:60]:
            if math.gcd(a, b) == 1 and a * b in h:
                assert h[a * b] == h[a] * h[b]


def test_selberg_examples():
    assert selberg_main_term(lambda p: Fraction(1, p), 4, exact=True) == (1, 1)
    h, inv = selberg_main_term(lambda p: Fraction(1, p), 10**4)
    assert h / math.log(10**4) > 0.5 and inv == pytest.approx(1 / h)
    h2, _ = selberg_main_term(lambda p: Fraction(2, p), 10**4, primes=sympy.primerange(3, 100))
    assert h2 / math.log(10**4) ** 2 > 0.1
    with pytest.raises(ValueError):
        selberg_main_term(lambda p: Fraction(1, p), 10**4, primes=[])
    with pytest.raises(ValueError):
        selberg_main_term(lambda p: Fraction(1, p), 3)


def test_selberg_exact_matches_float():
    hx, _ = selberg_main_term(lambda p: Fraction(1, p), 10**4, exact=True)
    hf, _ = selberg_main_term(lambda p: Fraction(1, p), 10**4)
    assert isinstance(hx, Fraction)
    assert float(hx) == pytest.approx(hf, rel=1e-12)
    # h(d) = 1/phi(d) for g = 1/p
    direct = sum(Fraction(1, sympy.totient(d)) for d in range(1, 100) if sympy.factorint(d) and
                 all(e == 1 for e in sympy.factorint(d).values())) + 1
    assert hx == direct


def test_arithmetic_functions():
    assert tau3(1) == 1
    for p in (2, 7, 97):
        assert tau3(p) == 3
    assert divisor_count(12) == 6 and omega(12) == 2


def test_tau3_convolution_identity():
    for d in range(1, 10_001):
        assert tau3(d) == sum(divisor_count(e) for e in sympy.divisors(d))


@given(st.integers(1, 5000))
def test_sum_1_omega_is_floor(x):
    assert sum_k_omega(1, x) == x


def test_sum_2_omega(table):
    assert sum_k_omega(2, 10) == 23
    x = 10**6
    ratio = sum_k_omega(2, x, table) / (c_k0(2, table=table) * x * math.log(x))
    assert abs(ratio - 1) < 0.15


def test_mertens(table):
    m = mertens_product(1, 2, exact=True)
    assert m.exact_product == Fraction(1, 2) and m.product == pytest.approx(0.5)
    m1 = mertens_product(1, 10**6, table)
    assert abs(m1.product * math.exp(EULER_GAMMA) * math.log(10**6) - 1) < 0.05
    assert abs(m1.ratio - 1) < 0.05
    m2 = mertens_product(2, 10**6, table)
    assert abs(m2.ratio - 1) < 0.10
    with pytest.raises(ValueError):
        mertens_product(1, 1)


def test_euler_gamma_literal():
    assert EULER_GAMMA == pytest.approx(float(sympy.EulerGamma.evalf(30)), abs=1e-16)


def test_sieve_report(table):
    rep = sieve_report(10**4, mertens_x=10**4)
    assert rep.h_sum > 0 and rep.main_term == pytest.approx(1 / rep.h_sum)
    assert rep.remainder == "not evaluated"
    assert rep.tau3_weight_sum > 0
    assert '"remainder": "not evaluated"' in rep.to_json()
    bad = sieve_report(10**4, bad_primes=[2, 3], mertens_x=10**4)
    assert bad.h_sum < rep.h_sum
    # squarefree d < 30: tau_3 = 3^omega
    small = sieve_report(30, mertens_x=100)
    want = sum(3 ** len(sympy.factorint(d)) for d in range(1, 30)
               if all(e == 1 for e in sympy.factorint(d).values()))
    assert small.tau3_weight_sum == want
