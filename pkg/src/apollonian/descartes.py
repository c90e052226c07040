"""Exact arithmetic for the Descartes quadratic form and the Apollonian generators.

Curvature vectors are plain tuples of Python ints.  By default every
operation is checked against the signed 64-bit range, so results agree
with what the compiled enumeration kernels can represent; pass
``exact=True`` to work with unbounded integers instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INT64_MAX = 2**63 - 1
INT64_MIN = -(2**63)

CurvatureVector = tuple[int, ...]

PRESETS: dict[str, CurvatureVector] = {
    "strip3d": (0, 0, 1, 1, 1),
    "bounded3d": (-1, 2, 2, 3, 3),
    "strip2d": (0, 0, 1, 1),
    "bounded2d": (-1, 2, 2, 3),
}


class CurvatureOverflowError(OverflowError):
    """An entry or intermediate left the signed 64-bit range."""


class ReductionError(RuntimeError):
    """Greedy reduction failed to reach a reduced vector within the step cap."""


def _check(value: int, exact: bool) -> int:
    if not exact and not (INT64_MIN <= value <= INT64_MAX):
        raise CurvatureOverflowError(f"integer {value} exceeds the 64-bit range")
    return value


def as_vector(v: Sequence[int], exact: bool = False) -> CurvatureVector:
    """Coerce *v* to a tuple of ints, rejecting non-integral entries."""
    out = []
    for x in v:
        if isinstance(x, (bool, np.bool_)):
            raise TypeError("curvatures must be integers, not booleans")
        ix = int(x)
        if ix != x:
            raise TypeError(f"curvature {x!r} is not an integer")
        out.append(_check(ix, exact))
    return tuple(out)


@dataclass(frozen=True)
class DescartesForm:
    """``Q_n(k) = n * sum(k_i^2) - (sum k_i)^2`` on ``n + 2`` curvatures."""

    n: int = 3
    gram: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be positive")
        m = self.n + 2
        g = self.n * np.eye(m, dtype=np.int64) - np.ones((m, m), dtype=np.int64)
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)

    @property
    def arity(self) -> int:
        return self.n + 2


def eval_form(form: DescartesForm, v: Sequence[int], exact: bool = False) -> int:
    """Exact value of ``n * sum(v^2) - (sum v)^2``."""
    v = as_vector(v, exact)
    if len(v) != form.arity:
        raise ValueError(f"expected {form.arity} curvatures, got {len(v)}")
    s = _check(sum(v), exact)
    sq = 0
    for x in v:
        sq = _check(sq + _check(x * x, exact), exact)
    return _check(_check(form.n * sq, exact) - _check(s * s, exact), exact)


def eval_gram(form: DescartesForm, v: Sequence[int]) -> int:
    """``v^T G v`` through the Gram matrix, using unbounded Python ints."""
    g = form.gram.tolist()
    v = [int(x) for x in v]
    if len(v) != form.arity:
        raise ValueError(f"expected {form.arity} curvatures, got {len(v)}")
    return sum(v[i] * g[i][j] * v[j] for i in range(len(v)) for j in range(len(v)))


def signature(form: DescartesForm | np.ndarray, tol: float = 1e-9) -> tuple[int, int]:
    """Counts of positive and negative eigenvalues of the Gram matrix.

    Accepts a form or any real symmetric matrix.
    """
    g = form.gram if isinstance(form, DescartesForm) else np.asarray(form)
    ev = np.linalg.eigvalsh(np.asarray(g, dtype=float))
    scale = max(1.0, float(np.abs(ev).max()))
    return int(np.sum(ev > tol * scale)), int(np.sum(ev < -tol * scale))


@dataclass(frozen=True)
class CompanionPair:
    """Solutions of ``Q_n(partial, k) = 0`` in the last curvature.

    ``status`` is ``"integer"``, ``"real"`` (irrational or non-integral
    rational roots, given as floats) or ``"complex"`` (no real root).
    The roots are ``(s +/- sqrt(disc)) / (n - 1)`` with ``s`` the partial sum.
    """

    status: str
    roots: tuple | None
    partial_sum: int
    disc: int
    denominator: int


def companion_pair(form: DescartesForm, partial: Sequence[int], exact: bool = False) -> CompanionPair:
    partial = as_vector(partial, exact)
    n = form.n
    if len(partial) != n + 1:
        raise ValueError(f"expected {n + 1} curvatures, got {len(partial)}")
    if n < 2:
        raise ValueError("companion pair needs n >= 2")
    s1 = _check(sum(partial), exact)
    s2 = _check(sum(x * x for x in partial), exact)
    # (n-1) k^2 - 2 s1 k + (n s2 - s1^2) = 0 ; quarter-discriminant below
    disc = _check(n * (s1 * s1 - (n - 1) * s2), exact)
    den = n - 1
    if disc < 0:
        return CompanionPair("complex", None, s1, disc, den)
    r = math.isqrt(disc)
    if r * r == disc and (s1 - r) % den == 0 and (s1 + r) % den == 0:
        lo, hi = (s1 - r) // den, (s1 + r) // den
        return CompanionPair("integer", (_check(lo, exact), _check(hi, exact)), s1, disc, den)
    sq = math.sqrt(disc)
    return CompanionPair("real", ((s1 - sq) / den, (s1 + sq) / den), s1, disc, den)


@dataclass(frozen=True)
class GeneratorSet:
    """The ``n + 2`` reflections ``S_i``, acting on column vectors from the left.

    ``S_i`` replaces ``k_i`` by ``c * sum_{j != i} k_j - k_i`` with
    ``c = 2 / (n - 1)``; only ``n`` in {2, 3} gives integral matrices.
    """

    n: int = 3
    matrices: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise ValueError("integral Apollonian generators exist only for n = 2 or 3")
        m = self.n + 2
        c = self.coefficient
        mats = []
        for i in range(m):
            s = np.eye(m, dtype=np.int64)
            s[i, :] = c
            s[i, i] = -1
            s.setflags(write=False)
            mats.append(s)
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def coefficient(self) -> int:
        return 2 // (self.n - 1)

    @property
    def arity(self) -> int:
        return self.n + 2

    @property
    def form(self) -> DescartesForm:
        return DescartesForm(self.n)


def apply_generator(gens: GeneratorSet, i: int, v: Sequence[int], exact: bool = False) -> CurvatureVector:
    """``S_i v`` with 1-based index *i*."""
    v = as_vector(v, exact)
    m = gens.arity
    if len(v) != m:
        raise ValueError(f"expected {m} curvatures, got {len(v)}")
    if not 1 <= i <= m:
        raise IndexError(f"generator index {i} outside 1..{m}")
    k = i - 1
    s = _check(sum(v), exact)
    new = _check(gens.coefficient * (s - v[k]) - v[k], exact)
    return v[:k] + (new,) + v[k + 1:]


def greedy_step(gens: GeneratorSet, v: CurvatureVector, exact: bool = False) -> int | None:
    """1-based index of the move with the largest strict sum decrease, or None.

    Ties go to the smallest index.
    """
    c = gens.coefficient
    s = sum(v)
    best, best_dec = None, 0
    for k, x in enumerate(v):
        dec = _check((c + 2) * x - c * s, exact)
        if dec > best_dec:
            best, best_dec = k + 1, dec
    return best


@dataclass(frozen=True)
class RootQuintuple:
    vector: CurvatureVector
    reduced: bool


def is_reduced(gens: GeneratorSet, v: Sequence[int]) -> bool:
    return greedy_step(gens, as_vector(v, exact=True), exact=True) is None


def reduce_to_root(
    gens: GeneratorSet, v: Sequence[int], max_steps: int = 1_000_000, exact: bool = False
) -> tuple[RootQuintuple, list[int]]:
    """Greedy sum-descent to a reduced vector.

    Returns the root and the word of generator indices in the order they
    were applied to *v*; applying the reversed word to the root gives *v*
    back.
    """
    v = as_vector(v, exact)
    q = eval_form(gens.form, v, exact=True)
    if q != 0:
        raise ValueError(f"vector {v} is off the cone (Q = {q})")
    word: list[int] = []
    for _ in range(max_steps):
        i = greedy_step(gens, v, exact)
        if i is None:
            return RootQuintuple(v, True), word
        v = apply_generator(gens, i, v, exact)
        word.append(i)
    raise ReductionError(
        f"no reduced vector after {max_steps} steps; {v} is not on a reducible orbit component"
    )


def replay(gens: GeneratorSet, root: Sequence[int], word: Sequence[int], exact: bool = False) -> CurvatureVector:
    """Apply ``word`` right-to-left to *root* (inverse of :func:`reduce_to_root`)."""
    v = as_vector(root, exact)
    for i in reversed(word):
        v = apply_generator(gens, i, v, exact)
    return v


def resolve_root(spec: str | Sequence[int]) -> CurvatureVector:
    """Parse a preset name or a comma-separated/sequence curvature tuple."""
    if isinstance(spec, str):
        key = spec.strip()
        if key in PRESETS:
            return PRESETS[key]
        try:
            return as_vector([int(x) for x in key.split(",") if x.strip()])
        except ValueError:
            raise ValueError(
                f"unknown root {spec!r}; use integers like 0,0,1,1,1 or one of {sorted(PRESETS)}"
            ) from None
    return as_vector(spec)
