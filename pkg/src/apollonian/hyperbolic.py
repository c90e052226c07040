"""Rank-one hyperbolic geometry over R and C: models, Busemann functions, Heisenberg group.

Conventions
-----------
* Diagonal form ``<z, w> = sum_{i<n} z_i conj(w_i) - z_n conj(w_n)`` on
  ``F^{n,1}``; the ball point ``b`` lifts to ``(b, 1)``.
* Antidiagonal form with matrix ``J`` (ones in the two corners, identity
  in between); group elements act on row vectors from the right.
* Horospherical coordinates ``(x, t, y)``: ``x in F^{n-1}``, ``t`` real
  (the imaginary part, absent over R), height ``y > 0``.  The reference
  point is ``o = (0, 0, 1)``, the ball origin.
* Sectional curvature in ``[-1, -1/4]`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

DIAGONAL = "diagonal"
ANTIDIAGONAL = "antidiagonal"


class ConvergenceError(ArithmeticError):
    """A numerical limit did not settle within tolerance."""


@dataclass(frozen=True)
class ProjVector:
    coords: np.ndarray
    form_kind: str = DIAGONAL

    def __post_init__(self) -> None:
        c = np.asarray(self.coords, dtype=complex)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("projective vectors need at least two coordinates")
        if not np.any(c):
            raise ValueError("the zero vector is not a projective point")
        if self.form_kind not in (DIAGONAL, ANTIDIAGONAL):
            raise ValueError(f"unknown form kind {self.form_kind!r}")
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.size - 1

    def scaled(self, lam: complex) -> "ProjVector":
        return ProjVector(self.coords * lam, self.form_kind)


@dataclass(frozen=True)
class HoroPoint:
    z: np.ndarray
    t: float
    y: float

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise ValueError("height must be positive")
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=complex)))


@dataclass(frozen=True)
class HeisenbergElement:
    xi: np.ndarray
    v: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=complex)))


@dataclass(frozen=True)
class BallPoint:
    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.atleast_1d(np.asarray(self.w, dtype=complex))
        if np.vdot(w, w).real >= 1:
            raise ValueError("ball points need Euclidean norm < 1")
        object.__setattr__(self, "w", w)


def _gram(kind: str, m: int) -> np.ndarray:
    if kind == DIAGONAL:
        return np.diag([1.0] * (m - 1) + [-1.0]).astype(complex)
    J = np.zeros((m, m), dtype=complex)
    J[0, -1] = J[-1, 0] = 1
    J[1:-1, 1:-1] = np.eye(m - 2)
    return J


def hermitian_form(Z: ProjVector, W: ProjVector) -> complex:
    """``<Z, W>``, linear in ``Z`` and conjugate-linear in ``W``."""
    if Z.form_kind != W.form_kind:
        raise ValueError("vectors use different Hermitian forms")
    if Z.coords.size != W.coords.size:
        raise ValueError("dimension mismatch")
    return complex(Z.coords @ _gram(Z.form_kind, Z.coords.size) @ W.coords.conj())


def _norm2(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def dist(X: ProjVector, Y: ProjVector) -> float:
    """``cosh^2(d/2) = <X,Y><Y,X> / (<X,X><Y,Y>)``."""
    xx, yy = hermitian_form(X, X).real, hermitian_form(Y, Y).real
    if xx >= 0 or yy >= 0:
        raise ValueError("distance needs negative vectors")
    c = abs(hermitian_form(X, Y)) ** 2 / (xx * yy)
    return 2.0 * math.acosh(math.sqrt(max(c, 1.0)))


# coordinate changes --------------------------------------------------------


def ball_to_proj(b: BallPoint) -> ProjVector:
    return ProjVector(np.append(b.w, 1.0))


def proj_to_ball(Z: ProjVector) -> BallPoint:
    if Z.form_kind != DIAGONAL:
        raise ValueError("ball coordinates use the diagonal form")
    if hermitian_form(Z, Z).real >= 0:
        raise ValueError("not a point of hyperbolic space")
    return BallPoint(Z.coords[:-1] / Z.coords[-1])


def _ball_to_horo_raw(w: np.ndarray) -> tuple[np.ndarray, float, float]:
    zp, zn = w[:-1], w[-1]
    den = abs(1 + zn) ** 2
    if den == 0:
        raise ValueError("the point (0', -1) maps to infinity")
    return zp / (1 + zn), 2 * zn.imag / den, (1 - abs(zn) ** 2 - _norm2(zp)) / den


def ball_to_horo(b: BallPoint) -> HoroPoint:
    z, t, y = _ball_to_horo_raw(b.w)
    return HoroPoint(z, t, y)


def boundary_to_heisenberg(w: Sequence[complex]) -> HeisenbergElement:
    """Boundary point of the ball (``|w| = 1``) to Heisenberg coordinates."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if not math.isclose(_norm2(w), 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValueError("not a boundary point")
    z, t, y = _ball_to_horo_raw(w)
    return HeisenbergElement(z, t)


def horo_to_proj(h: HoroPoint, form_kind: str = DIAGONAL) -> ProjVector:
    """``(x, (1-|x|^2-y+it)/2, (1+|x|^2+y-it)/2)``, or ``((-|x|^2-y+it)/2, x, 1)``."""
    r = _norm2(h.z)
    if form_kind == DIAGONAL:
        return ProjVector(np.concatenate([h.z, [(1 - r - h.y + 1j * h.t) / 2, (1 + r + h.y - 1j * h.t) / 2]]))
    return ProjVector(np.concatenate([[(-r - h.y + 1j * h.t) / 2], h.z, [1.0]]), ANTIDIAGONAL)


def heisenberg_to_proj(q: HeisenbergElement) -> ProjVector:
    """Light-cone lift ``(xi, (1-|xi|^2+iv)/2, (1+|xi|^2-iv)/2)`` of a boundary point."""
    r = _norm2(q.xi)
    return ProjVector(np.concatenate([q.xi, [(1 - r + 1j * q.v) / 2, (1 + r - 1j * q.v) / 2]]))


def proj_to_horo(Z: ProjVector) -> HoroPoint:
    if Z.form_kind == DIAGONAL:
        return ball_to_horo(proj_to_ball(Z))
    c = Z.coords / Z.coords[-1]
    x = c[1:-1]
    return HoroPoint(x, 2 * c[0].imag, -2 * c[0].real - _norm2(x))


INFINITY_POINT = (-1.0, 1.0)


def infinity(n: int) -> ProjVector:
    """``Q = (0', -1, 1)`` in ``F^{n,1}``."""
    return ProjVector(np.concatenate([np.zeros(n - 1), INFINITY_POINT]))


def origin(n: int) -> ProjVector:
    return ProjVector(np.concatenate([np.zeros(n), [1.0]]))


# Busemann functions ----------------------------------------------------------


def busemann_closed(Q: ProjVector, Z: ProjVector, normalize: bool = True, tol: float = 1e-9) -> float:
    """``e^{-B_Q(z)} = -<Z,Z> / (<Z,Q><Q,Z>)``.

    With ``normalize`` the value is divided by its value at ``o``, which
    is the same as rescaling ``Q`` so that ``B_Q(o) = 0``.
    """
    if Q.form_kind != DIAGONAL or Z.form_kind != DIAGONAL:
        raise ValueError("Busemann formulas use the diagonal form")
    qq = hermitian_form(Q, Q)
    scale = max(1.0, _norm2(Q.coords))
    if abs(qq) > tol * scale:
        raise ValueError("Q is not on the light cone")
    zz = hermitian_form(Z, Z).real
    if zz >= 0:
        raise ValueError("Z is not a point of hyperbolic space")
    zq = hermitian_form(Z, Q)
    if zq == 0:
        raise ValueError("<Z, Q> = 0")
    val = -zz / abs(zq) ** 2
    if normalize:
        o = origin(Z.dim)
        val *= abs(hermitian_form(o, Q)) ** 2
    return float(val)


def busemann_horospherical(base: HeisenbergElement | tuple, p: HoroPoint) -> float:
    """``4y / ((|x-xi|^2 + y)^2 + (t - v + 2 Im<<x, xi>>)^2)``."""
    if not isinstance(base, HeisenbergElement):
        base = HeisenbergElement(*base)
    x, xi = p.z, base.xi
    if xi.size != x.size:
        if xi.size != 1 or xi[0] != 0:
            raise ValueError("dimension mismatch")
        xi = np.zeros_like(x)  # scalar 0 is shorthand for the origin
    im = np.vdot(xi, x).imag  # <<x, xi>> = sum x_i conj(xi_i)
    return float(4 * p.y / ((_norm2(x - xi) + p.y) ** 2 + (p.t - base.v + 2 * im) ** 2))


def busemann_limit(Q: ProjVector, Z: ProjVector, t_max: float = 40.0, tol: float = 1e-5) -> float:
    """``d(z, gamma_t) - t`` at ``t = t_max``, along the unit-speed geodesic from ``o`` to ``Q``."""
    if t_max < 20:
        raise ValueError("t_max must be at least 20")
    if Q.form_kind != DIAGONAL:
        raise ValueError("Busemann formulas use the diagonal form")
    if Q.coords[-1] == 0:
        raise ValueError("Q is not a light-cone vector")
    q = Q.coords[:-1] / Q.coords[-1]
    if not math.isclose(_norm2(q), 1.0, abs_tol=1e-9):
        raise ValueError("Q is not on the light cone")
    zz = hermitian_form(Z, Z).real
    if zz >= 0:
        raise ValueError("Z is not a point of hyperbolic space")

    def at(t: float) -> float:
        # Y_t = (sinh(t/2) q, cosh(t/2)) = e^{t/2}/2 * ((1 - e^-t) q, 1 + e^-t), <Y,Y> = -1
        e = math.exp(-t)
        Y = ProjVector(np.append((1 - e) * q, 1 + e))
        r = abs(hermitian_form(Z, Y)) ** 2 / (-zz) / 4
        # cosh^2(d/2) = r e^t, so d - t = log r + 2 log(1 + sqrt(1 - e^-t / r))
        return math.log(r) + 2 * math.log1p(math.sqrt(max(0.0, 1 - e / r)))

    v1, v2 = at(t_max), at(t_max + 5)
    if abs(v1 - v2) > tol:
        raise ConvergenceError(f"Busemann limit unsettled: {v1} vs {v2}")
    return v1


# Heisenberg group --------------------------------------------------------------


def _im_inner(x: np.ndarray, w: np.ndarray) -> float:
    return float(np.vdot(w, x).imag)  # Im <<x, w>>


def heisenberg_mul(a: HeisenbergElement, b: HeisenbergElement) -> HeisenbergElement:
    """``(z, t)(w, s) = (z + w, t + s - 2 Im<<z, w>>)``."""
    if a.xi.size != b.xi.size:
        raise ValueError("dimension mismatch")
    return HeisenbergElement(a.xi + b.xi, a.v + b.v - 2 * _im_inner(a.xi, b.xi))


def heisenberg_inv(a: HeisenbergElement) -> HeisenbergElement:
    return HeisenbergElement(-a.xi, -a.v)


def cygan_gauge(a: HeisenbergElement) -> float:
    return (_norm2(a.xi) ** 2 + a.v**2) ** 0.25


def cygan_dist(a: HeisenbergElement, b: HeisenbergElement) -> float:
    """``|a b^{-1}| = (|x-w|^4 + (t - s + 2 Im<<x, w>>)^2)^{1/4}``."""
    return cygan_gauge(heisenberg_mul(a, heisenberg_inv(b)))


# matrix groups in the antidiagonal form ---------------------------------------


def n_minus(tau: Sequence[complex], t: float) -> np.ndarray:
    """Lower-triangular element of the opposite nilpotent group."""
    tau = np.atleast_1d(np.asarray(tau, dtype=complex))
    m = tau.size + 2
    M = np.eye(m, dtype=complex)
    M[1:-1, 0] = -tau.conj()
    M[-1, 0] = (-_norm2(tau) + 1j * t) / 2
    M[-1, 1:-1] = tau
    return M


def n_plus(tau: Sequence[complex], t: float) -> np.ndarray:
    """Upper-triangular element ``J n^-(tau, t) J`` of ``N``."""
    M = n_minus(tau, t)
    J = _gram(ANTIDIAGONAL, M.shape[0])
    return J @ M @ J


def a_matrix(y: float, m: int) -> np.ndarray:
    return np.diag([y] + [1.0] * (m - 2) + [1.0 / y]).astype(complex)


def na_commutation_check(tau: Sequence[complex], t: float, y: float) -> tuple[float, float]:
    """Frobenius residuals of ``n_x a_y = a_y n_{x/y}`` and ``n^-_x a_y = a_y n^-_{yx}``.

    ``x/y`` acts by the dilation ``(tau, t) -> (tau/y, t/y^2)``.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=complex))
    m = tau.size + 2
    A = a_matrix(y, m)
    r1 = np.linalg.norm(n_plus(tau, t) @ A - A @ n_plus(tau / y, t / y**2))
    r2 = np.linalg.norm(n_minus(tau, t) @ A - A @ n_minus(tau * y, t * y**2))
    return float(r1), float(r2)


def light_cone_scaling(v0: Sequence, y) -> list:
    """Row vector ``v0 a_y`` with ``a_y = diag(y, 1, ..., 1, 1/y)``.

    Rational input stays exact (Fractions).
    """
    if y == 0:
        raise ZeroDivisionError("a_y needs y != 0")
    exact = all(isinstance(x, (int, Fraction)) for x in list(v0) + [y])
    one = Fraction(1) if exact else 1.0
    y = Fraction(y) if exact else y
    diag = [y] + [one] * (len(v0) - 2) + [one / y]
    return [x * d for x, d in zip(v0, diag)]


# the horospherical-average ODE ------------------------------------------------

_u = sympy.Symbol("u", real=True)


def horo_ode_residual(D, delta, rate, grid: Sequence[float] | None = None) -> float:
    """Max over ``grid`` of ``|f'' + D f' + delta (D - delta) f|`` for ``f = e^{-rate u}``."""
    D, delta, rate = (sympy.nsimplify(x) for x in (D, delta, rate))
    f = sympy.exp(-rate * _u)
    expr = sympy.simplify(sympy.diff(f, _u, 2) + D * sympy.diff(f, _u) + delta * (D - delta) * f)
    if expr == 0:
        return 0.0
    grid = np.linspace(0.0, 5.0, 51) if grid is None else np.asarray(grid, dtype=float)
    fn = sympy.lambdify(_u, expr, "numpy")
    return float(np.max(np.abs(fn(grid))))


def horo_ode_check(D, delta, grid: Sequence[float] | None = None) -> dict[str, float]:
    """Residuals for both exponents ``delta`` and ``D - delta`` plus a negative control."""
    if not (D > 0 and 0 < delta < D):
        raise ValueError("need D > 0 and 0 < delta < D")
    control = Fraction(D) / 2 if Fraction(delta) != Fraction(D) / 2 else Fraction(D) / 2 + Fraction(1, 2)
    return {
        "delta": horo_ode_residual(D, delta, delta, grid),
        "D-delta": horo_ode_residual(D, delta, Fraction(D) - Fraction(delta), grid),
        "control": horo_ode_residual(D, delta, control, grid),
    }


# verification suite ------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool


def _rand_c(rng, k: int) -> np.ndarray:
    return rng.normal(size=k) + 1j * rng.normal(size=k)


def random_horo(rng, n: int = 3) -> HoroPoint:
    return HoroPoint(_rand_c(rng, n - 1), float(rng.normal()), float(rng.uniform(0.1, 3.0)))


def random_boundary(rng, n: int = 3) -> HeisenbergElement:
    return HeisenbergElement(_rand_c(rng, n - 1), float(rng.normal()))


def random_ball(rng, n: int = 3) -> BallPoint:
    w = _rand_c(rng, n)
    return BallPoint(w / np.linalg.norm(w) * rng.uniform(0, 0.95))


def geometry_verify(seed: int = 0, n: int = 3, samples: int = 100) -> list[Check]:
    """Numerical checks of every identity in this module."""
    rng = np.random.default_rng(seed)
    out: list[Check] = []

    def add(name, residual, tol, flip=False):
        ok = residual > tol if flip else residual <= tol
        out.append(Check(name, float(residual), tol, bool(ok)))

    inf = infinity(n)
    add("busemann_infinity_equals_height",
        max(abs(busemann_closed(inf, horo_to_proj(p)) - p.y) for p in (random_horo(rng, n) for _ in range(samples))),
        1e-12)

    r = 0.0
    for _ in range(samples):
        q, p = random_boundary(rng, n), random_horo(rng, n)
        raw = busemann_closed(heisenberg_to_proj(q), horo_to_proj(p), normalize=False)
        r = max(r, abs(raw - busemann_horospherical(q, p)) / raw)
    add("busemann_closed_vs_horospherical", r, 1e-10)

    r = 0.0
    for _ in range(samples):
        w = _rand_c(rng, n)
        Q = ProjVector(np.append(w / np.linalg.norm(w), 1.0))
        Z = ball_to_proj(random_ball(rng, n))
        r = max(r, abs(busemann_limit(Q, Z, 40.0) + math.log(busemann_closed(Q, Z))))
    add("busemann_limit_vs_closed", r, 1e-6)

    r = 0.0
    for _ in range(samples):
        a, b, c = (random_boundary(rng, n) for _ in range(3))
        e = heisenberg_mul(a, heisenberg_inv(a))
        lhs, rhs = heisenberg_mul(heisenberg_mul(a, b), c), heisenberg_mul(a, heisenberg_mul(b, c))
        r = max(r, cygan_gauge(e), np.abs(lhs.xi - rhs.xi).max(), abs(lhs.v - rhs.v))
    add("heisenberg_group_axioms", r, 1e-12)

    r = 0.0
    for _ in range(samples):
        a, b, g = (random_boundary(rng, n) for _ in range(3))
        r = max(r, abs(cygan_dist(heisenberg_mul(a, g), heisenberg_mul(b, g)) - cygan_dist(a, b)))
    add("cygan_right_invariance", r, 1e-12)

    r = 0.0
    for _ in range(samples):
        r = max(r, *na_commutation_check(_rand_c(rng, n - 1), float(rng.normal()), float(rng.uniform(0.1, 10))))
    add("na_commutation", r, 1e-12)

    ode = horo_ode_check(3, 2)
    add("horo_ode_delta", ode["delta"], 1e-12)
    add("horo_ode_D_minus_delta", ode["D-delta"], 1e-12)
    add("horo_ode_negative_control", ode["control"], 1e-12, flip=True)

    r = 0.0
    for _ in range(samples):
        b = random_ball(rng, n)
        back = proj_to_ball(horo_to_proj(ball_to_horo(b)))
        r = max(r, np.abs(back.w - b.w).max())
    add("ball_horo_proj_round_trip", r, 1e-10)

    r = max(abs(dist(ball_to_proj(BallPoint(np.zeros(n))),
                     ball_to_proj(BallPoint(np.append(np.zeros(n - 1), math.tanh(t / 2))))) - t)
            for t in (1.0, 2.0, 5.0))
    add("geodesic_distance", r, 1e-9)

    worst = 0.0
    for _ in range(samples * 10):
        X, Y, Z = (ball_to_proj(random_ball(rng, n)) for _ in range(3))
        worst = max(worst, dist(X, Z) - dist(X, Y) - dist(Y, Z))
    add("triangle_inequality", max(worst, 0.0), 1e-9)

    v0 = [Fraction(0)] * (n + 1)
    v0[-1] = Fraction(1)
    v = light_cone_scaling(v0, Fraction(2))
    add("light_cone_scaling", float(abs(v[-1] - Fraction(1, 2)) + sum(abs(x) for x in v[:-1])), 0.0)
    return out
