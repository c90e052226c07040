import math
from fractions import Fraction

import numpy as np
import pytest

from apollonian.hyperbolic import (
    ANTIDIAGONAL,
    BallPoint,
    ConvergenceError,
    HeisenbergElement,
    HoroPoint,
    ProjVector,
    a_matrix,
    ball_to_horo,
    ball_to_proj,
    boundary_to_heisenberg,
    busemann_closed,
    busemann_horospherical,
    busemann_limit,
    cygan_dist,
    cygan_gauge,
    dist,
    geometry_verify,
    heisenberg_inv,
    heisenberg_mul,
    heisenberg_to_proj,
    hermitian_form,
    horo_ode_check,
    horo_ode_residual,
    horo_to_proj,
    infinity,
    light_cone_scaling,
    n_minus,
    n_plus,
    na_commutation_check,
    origin,
    proj_to_ball,
    proj_to_horo,
    random_ball,
    random_boundary,
    random_horo,
)

N = 3


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def test_hermitian_examples(rng):
    e = ProjVector([0, 0, 0, 1])
    assert hermitian_form(e, e) == -1
    assert hermitian_form(ProjVector([1, 0, 0, 0]), e) == 0
    for _ in range(100):
        Z = ProjVector(rng.normal(size=4) + 1j * rng.normal(size=4))
        W = ProjVector(rng.normal(size=4) + 1j * rng.normal(size=4))
        assert abs(hermitian_form(Z, W) - hermitian_form(W, Z).conjugate()) < 1e-12
    with pytest.raises(ValueError):
        hermitian_form(e, ProjVector([0, 0, 1]))
    with pytest.raises(ValueError):
        hermitian_form(e, ProjVector([0, 0, 0, 1], ANTIDIAGONAL))


def test_dist_examples(rng):
    o = ball_to_proj(BallPoint(np.zeros(N)))
    assert dist(o, o) == 0
    for t in (1.0, 2.0, 5.0):
        p = ball_to_proj(BallPoint([0, 0, math.tanh(t / 2)]))
        assert abs(dist(o, p) - t) < 1e-9
    for _ in range(100):
        X, Y = ball_to_proj(random_ball(rng)), ball_to_proj(random_ball(rng))
        assert abs(dist(X.scaled(3), Y) - dist(X, Y)) < 1e-12
        assert abs(dist(X, Y) - dist(Y, X)) < 1e-12
    with pytest.raises(ValueError):
        dist(o, ProjVector([1, 0, 0, 1]))


def test_triangle_inequality(rng):
    for _ in range(1000):
        X, Y, Z = (ball_to_proj(random_ball(rng)) for _ in range(3))
        assert dist(X, Z) <= dist(X, Y) + dist(Y, Z) + 1e-9


def test_ball_origin_and_boundary():
    h = ball_to_horo(BallPoint(np.zeros(N)))
    assert np.allclose(h.z, 0) and h.t == 0 and h.y == 1
    q = boundary_to_heisenberg([0, 0, 1])
    assert np.allclose(q.xi, 0) and q.v == 0
    with pytest.raises(ValueError):
        boundary_to_heisenberg([0, 0, -1])
    with pytest.raises(ValueError):
        BallPoint([0, 0, 1])


def test_round_trips(rng):
    for _ in range(200):
        b = random_ball(rng)
        h = ball_to_horo(b)
        Z = horo_to_proj(h)
        assert hermitian_form(Z, Z).real < 0
        assert np.abs(proj_to_ball(Z).w - b.w).max() < 1e-10
        for kind in ("diagonal", ANTIDIAGONAL):
            back = proj_to_horo(horo_to_proj(h, kind))
            assert np.abs(back.z - h.z).max() < 1e-10
            assert abs(back.t - h.t) < 1e-10 and abs(back.y - h.y) < 1e-10


def test_horo_lift_is_negative(rng):
    for _ in range(100):
        h = random_horo(rng)
        Z = horo_to_proj(h)
        assert hermitian_form(Z, Z).real == pytest.approx(-h.y, abs=1e-12)


def test_busemann_at_infinity(rng):
    inf = infinity(N)
    for _ in range(100):
        p = random_horo(rng)
        assert abs(busemann_closed(inf, horo_to_proj(p)) - p.y) < 1e-12


def test_busemann_normalization(rng):
    o = origin(N)
    for _ in range(20):
        w = rng.normal(size=N) + 1j * rng.normal(size=N)
        Q = ProjVector(np.append(w / np.linalg.norm(w), 1.0))
        assert busemann_closed(Q, o) == pytest.approx(1.0, abs=1e-15)
        assert abs(busemann_limit(Q, o)) < 1e-12


def test_busemann_projective_invariance(rng):
    for _ in range(100):
        Q = heisenberg_to_proj(random_boundary(rng))
        Z = horo_to_proj(random_horo(rng))
        base = busemann_closed(Q, Z)
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
        assert abs(busemann_closed(Q.scaled(phase), Z) - base) < 1e-12 * max(1, base)
        assert abs(busemann_closed(Q, Z.scaled(2.5)) - base) < 1e-12 * max(1, base)


def test_closed_matches_horospherical(rng):
    for _ in range(100):
        q, p = random_boundary(rng), random_horo(rng)
        raw = busemann_closed(heisenberg_to_proj(q), horo_to_proj(p), normalize=False)
        assert abs(raw - busemann_horospherical(q, p)) <= 1e-10 * raw


def test_horospherical_examples():
    for y in (0.5, 1.0, 2.0):
        assert busemann_horospherical((0, 0), HoroPoint([0, 0], 0.0, y)) == pytest.approx(4 / y)
        Q, Z = heisenberg_to_proj(HeisenbergElement([0, 0], 0)), horo_to_proj(HoroPoint([0, 0], 0.0, y))
        # normalized closed form = raw / 4 at this base point
        assert busemann_closed(Q, Z) == pytest.approx(1 / y)
    xi = np.array([0.3 + 0.1j, -0.2j])
    assert busemann_horospherical((xi, 0.7), HoroPoint(xi, 0.7, 2.0)) == pytest.approx(2.0)


def test_horospherical_dilation(rng):
    # (x, t, y) -> (r x, r^2 t, r^2 y) multiplies the value by r^-2
    for _ in range(50):
        p = random_horo(rng)
        r = rng.uniform(0.2, 5)
        q = HoroPoint(r * p.z, r * r * p.t, r * r * p.y)
        lhs = busemann_horospherical((0, 0), q)
        assert lhs == pytest.approx(busemann_horospherical((0, 0), p) / r**2, rel=1e-12)


def test_busemann_limit(rng):
    for _ in range(100):
        w = rng.normal(size=N) + 1j * rng.normal(size=N)
        Q = ProjVector(np.append(w / np.linalg.norm(w), 1.0))
        Z = ball_to_proj(random_ball(rng))
        closed = -math.log(busemann_closed(Q, Z))
        assert abs(busemann_limit(Q, Z, 40) - closed) < 1e-6
        assert abs(busemann_limit(Q, Z, 80) - busemann_limit(Q, Z, 40)) < 1e-8
    with pytest.raises(ValueError):
        busemann_limit(Q, Z, 10)


def test_busemann_limit_converges_monotonically(rng):
    w = rng.normal(size=N) + 1j * rng.normal(size=N)
    Q = ProjVector(np.append(w / np.linalg.norm(w), 1.0))
    Z = ball_to_proj(random_ball(rng))
    closed = -math.log(busemann_closed(Q, Z))
    errs = [abs(busemann_limit(Q, Z, t, tol=1.0) - closed) for t in (20, 25, 30, 35)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_busemann_limit_flags_far_points():
    Q = infinity(N).scaled(-1)
    Z = ball_to_proj(BallPoint([0, 0, -0.999999999]))
    with pytest.raises(ConvergenceError):
        busemann_limit(Q, Z, 20, tol=1e-12)


def test_heisenberg_axioms(rng):
    e = HeisenbergElement([0, 0], 0)
    for _ in range(100):
        a, b, c = (random_boundary(rng) for _ in range(3))
        ai = heisenberg_mul(a, heisenberg_inv(a))
        assert cygan_gauge(ai) < 1e-12
        ae = heisenberg_mul(a, e)
        assert np.abs(ae.xi - a.xi).max() == 0 and ae.v == a.v
        l, r = heisenberg_mul(heisenberg_mul(a, b), c), heisenberg_mul(a, heisenberg_mul(b, c))
        assert np.abs(l.xi - r.xi).max() < 1e-12 and abs(l.v - r.v) < 1e-12


def test_cygan(rng):
    for _ in range(100):
        a, b, g = (random_boundary(rng) for _ in range(3))
        d = cygan_dist(a, b)
        assert abs(cygan_dist(heisenberg_mul(a, g), heisenberg_mul(b, g)) - d) < 1e-12
        x, w = a.xi, b.xi
        im = np.vdot(w, x).imag
        want = (np.linalg.norm(x - w) ** 4 + (a.v - b.v + 2 * im) ** 2) ** 0.25
        assert d == pytest.approx(want, rel=1e-12)
    # real case: no t coordinate, d_N = |x - w|
    for _ in range(50):
        x, w = rng.normal(size=2), rng.normal(size=2)
        assert cygan_dist(HeisenbergElement(x, 0), HeisenbergElement(w, 0)) == pytest.approx(np.linalg.norm(x - w))


def test_matrices_preserve_form(rng):
    J = np.zeros((4, 4))
    J[0, 3] = J[3, 0] = 1
    J[1:3, 1:3] = np.eye(2)
    for _ in range(20):
        tau, t = rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal()
        for M in (n_minus(tau, t), n_plus(tau, t), a_matrix(rng.uniform(0.1, 10), 4)):
            assert np.abs(M @ J @ M.conj().T - J).max() < 1e-12


def test_na_commutation(rng):
    for _ in range(100):
        r1, r2 = na_commutation_check(rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(),
                                      rng.uniform(0.1, 10))
        assert r1 < 1e-12 and r2 < 1e-12
    assert na_commutation_check([0.3 + 1j, -2], 1.5, 1.0) == (0.0, 0.0)
    assert na_commutation_check([0, 0], 0.0, 3.7) == (0.0, 0.0)


def test_light_cone_scaling():
    v0 = [0, 0, 0, 0, 1]
    assert light_cone_scaling(v0, 2) == [0, 0, 0, 0, Fraction(1, 2)]
    assert light_cone_scaling(v0, 1) == v0
    assert light_cone_scaling(light_cone_scaling(v0, Fraction(3)), Fraction(1, 3)) == v0
    with pytest.raises(ZeroDivisionError):
        light_cone_scaling(v0, 0)


def test_horo_ode():
    assert horo_ode_residual(3, 2, 2) == 0
    assert horo_ode_residual(3, 2, 1) == 0
    assert horo_ode_residual(3, 2, 1.5) > 0.1
    res = horo_ode_check(3, 2)
    assert res["delta"] <= 1e-12 and res["D-delta"] <= 1e-12 and res["control"] > 1e-12
    res = horo_ode_check(Fraction(7, 2), Fraction(5, 2))
    assert res["delta"] == 0 and res["control"] > 0
    with pytest.raises(ValueError):
        horo_ode_check(3, 4)


def test_real_field():
    p = HoroPoint([0.4, -0.3], 0.0, 1.7)
    Z = horo_to_proj(p)
    assert np.abs(Z.coords.imag).max() == 0
    assert abs(busemann_closed(infinity(N), Z) - 1.7) < 1e-12


def test_geometry_verify_all_pass():
    checks = geometry_verify(seed=1)
    assert len(checks) == 13
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]
