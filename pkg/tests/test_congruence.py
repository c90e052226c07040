import csv
from fractions import Fraction

import pytest
import sympy

from apollonian.congruence import (
    BRUTE_FORCE_LIMIT,
    brute_force_cone,
    check_multiplicativity,
    congruence_stats,
    count_zero_locus,
    crt_surjectivity,
    csv_header,
    detect_bad_primes,
    g_ratio,
    orbit_mod,
    write_csv,
)
from apollonian.descartes import PRESETS, GeneratorSet

from oracles import cone_points, orbit_mod_reference

STRIP, BOUNDED = PRESETS["strip3d"], PRESETS["bounded3d"]
G3 = GeneratorSet(3)


@pytest.mark.parametrize("root", [STRIP, BOUNDED, PRESETS["strip2d"]])
@pytest.mark.parametrize("d", [2, 3, 5, 6, 7])
def test_orbit_matches_reference(root, d):
    orb = orbit_mod(root, None, d)
    assert orb.as_set() == orbit_mod_reference(root, d)
    assert orb.is_closed(GeneratorSet(len(root) - 2).coefficient)


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_brute_force_cone_matches_scan(d):
    assert brute_force_cone(d) == len(cone_points(d))


def test_brute_force_cone_trivial_and_guard():
    assert brute_force_cone(1) == 1
    # Q vanishes identically mod 2
    assert brute_force_cone(2) == 32
    with pytest.raises(ValueError):
        brute_force_cone(BRUTE_FORCE_LIMIT + 1)


@pytest.mark.parametrize("root", [STRIP, BOUNDED])
@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_orbit_is_cone_minus_zero(root, p):
    # for these primes the orbit fills the nonzero isotropic vectors
    orb = orbit_mod(root, G3, p)
    assert len(orb) == brute_force_cone(p) - 1
    assert (0,) * 5 not in orb


def test_orbit_sizes_at_small_primes():
    assert len(orbit_mod(STRIP, G3, 2)) == 15
    assert len(orbit_mod(STRIP, G3, 3)) == 1


def test_orbit_idempotent_under_reduction():
    orb = orbit_mod(STRIP, G3, 7)
    assert all(tuple(x % 7 for x in v) == tuple(v) for v in orb.as_set())
    again = set()
    for v in list(orb.as_set())[:20]:
        again |= orbit_mod(v, G3, 7).as_set()
    assert again == orb.as_set()


def test_orbit_contains_root():
    orb = orbit_mod(BOUNDED, G3, 11)
    assert BOUNDED in orb and (10, 2, 2, 3, 3) in orb


def test_non_squarefree_warns():
    with pytest.warns(UserWarning, match="squarefree"):
        orb = orbit_mod(STRIP, G3, 4)
    assert orb.as_set() == orbit_mod_reference(STRIP, 4)


def test_zero_locus_fixtures():
    assert count_zero_locus({(0, 0, 1, 1, 1)}, 1, 5) == 1
    assert count_zero_locus({(1, 0, 1, 1, 1)}, 1, 5) == 0
    with pytest.raises(ValueError):
        count_zero_locus({(0, 0, 1, 1, 1)}, 6, 5)


@pytest.mark.parametrize("d", [5, 7, 35])
def test_zero_locus_matches_scan(d):
    orb = orbit_mod(STRIP, G3, d)
    ref = orbit_mod_reference(STRIP, d)
    primes = [p for p in (5, 7) if d % p == 0]
    for k in range(1, 6):
        want = sum(all(_prod(v[:k]) % p == 0 for p in primes) for v in ref)
        assert count_zero_locus(orb, k) == want
        assert count_zero_locus(ref, k, d) == want


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


def test_zero_counts_frozen():
    # frozen from the reference orbit scan
    assert congruence_stats(STRIP, 5).zero_counts[:2] == (104, 204)
    assert congruence_stats(STRIP, 7).zero_counts[:2] == (384, 678)


def test_stats_invariants():
    for d in (5, 7, 11, 35):
        st = congruence_stats(STRIP, d)
        assert all(isinstance(g, Fraction) for g in st.g)
        assert all(0 <= g <= 1 for g in st.g)
        assert list(st.g) == sorted(st.g)
        assert all(st.orbit_size % g.denominator == 0 for g in st.g)
        assert g_ratio(st, 1) == st.g[0]


def test_singleton_orbit_density_is_trivial():
    st = congruence_stats(STRIP, 3)
    assert st.orbit_size == 1 and g_ratio(st, 1) in (0, 1)
    assert congruence_stats(STRIP, 1).g == (Fraction(1),) * 5


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_densities_near_one_over_p(p):
    st = congruence_stats(STRIP, p)
    assert 0.5 <= p * g_ratio(st, 1) <= 2
    assert 0.5 <= p * g_ratio(st, 2) / 2 <= 2


def test_orbit_size_scales_like_p4():
    ratios = [len(orbit_mod(STRIP, G3, p)) / p**4 for p in (5, 7, 11, 13)]
    assert max(ratios) / min(ratios) < 1.5


def test_multiplicativity():
    mc = check_multiplicativity(STRIP, G3, 5, 7, 1)
    assert mc.equal and mc.lhs == Fraction(2, 75)
    mc = check_multiplicativity(STRIP, G3, 5, 1, 2)
    assert mc.equal
    with pytest.raises(ValueError):
        check_multiplicativity(STRIP, G3, 6, 4, 1)


def test_crt_surjectivity():
    sc = crt_surjectivity(STRIP, G3, 5, 7)
    assert sc.surjective and sc.size == sc.size1 * sc.size2


def test_detect_bad_primes():
    rep = detect_bad_primes(STRIP, [2, 3, 5, 7, 11, 13])
    assert rep.flagged == [3]
    rep = detect_bad_primes(BOUNDED, [3, 5, 7])
    assert rep.flagged == [3]


def test_csv(tmp_path):
    path = tmp_path / "g.csv"
    rows = [congruence_stats(STRIP, p) for p in (5, 7)]
    write_csv(path, rows, header="# fingerprint=x")
    lines = path.read_text().splitlines()
    assert lines[0] == "# fingerprint=x"
    table = list(csv.reader(lines[1:]))
    assert table[0] == csv_header()
    assert table[1][:4] == ["5", "624", "104", "204"]
    assert Fraction(int(table[1][7]), int(table[1][8])) == rows[0].g[0]


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19])
def test_zero_counts_closed_form(p):
    # point counts of the quadric on x1 = 0 and on x1 = x2 = 0, chi = (-3 | p)
    chi = sympy.legendre_symbol(-3 % p, p)
    st = congruence_stats(STRIP, p)
    assert st.orbit_size == p**4 - 1
    assert st.zero_counts[0] == p**3 - 1 + chi * p * (p - 1)
    assert st.zero_counts[1] == 2 * p**3 - p**2 + chi * (p**2 - p) - 1
