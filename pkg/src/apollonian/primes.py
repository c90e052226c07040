"""Prime tables, prime-curvature counting and the elementary sieve arithmetic.

Everything here that feeds a sieve main term is exact (Fractions or Python
ints) unless a function says otherwise; the asymptotic comparisons
(Mertens, ``c_k(0)``) are floating point by nature.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy

EULER_GAMMA = 0.57721566490153286060651209008240243

SEGMENT = 1 << 18


class PrimeTableTooSmall(ValueError):
    """A curvature exceeds the range covered by the prime table."""


def segmented_sieve(limit: int, segment: int = SEGMENT) -> np.ndarray:
    """``out[n] == 1`` iff ``n`` is prime, for ``0 <= n <= limit``."""
    limit = int(limit)
    out = np.zeros(max(limit + 1, 2), dtype=np.uint8)
    if limit < 2:
        return out[: limit + 1]
    r = math.isqrt(limit)
    base = np.ones(r + 1, dtype=bool)
    base[:2] = False
    for p in range(2, math.isqrt(r) + 1):
        if base[p]:
            base[p * p :: p] = False
    small = np.nonzero(base)[0]
    for lo in range(0, limit + 1, segment):
        hi = min(lo + segment, limit + 1)
        seg = np.ones(hi - lo, dtype=bool)
        for p in small:
            p = int(p)
            start = max(p * p, (lo + p - 1) // p * p)
            if start >= hi:
                continue
            seg[start - lo :: p] = False
        if lo == 0:
            seg[: min(2, hi)] = False
        out[lo:hi] = seg
    return out


class PrimeTable:
    """Primality bitmap up to ``limit`` with prime-factor counts on demand."""

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("limit must be positive")
        self.limit = int(limit)
        self.isprime = segmented_sieve(self.limit)
        self.isprime.setflags(write=False)

    def __contains__(self, n: int) -> bool:
        return self.is_prime(n)

    def is_prime(self, n: int) -> bool:
        n = abs(int(n))
        if n > self.limit:
            raise PrimeTableTooSmall(f"{n} exceeds the table limit {self.limit}")
        return bool(self.isprime[n])

    @cached_property
    def primes(self) -> np.ndarray:
        return np.nonzero(self.isprime)[0].astype(np.int64)

    @cached_property
    def omega(self) -> np.ndarray:
        """Number of distinct prime factors; ``omega[0] = omega[1] = 0``."""
        w = np.zeros(self.limit + 1, dtype=np.uint8)
        for p in self.primes:
            w[p::p] += 1
        w.setflags(write=False)
        return w

    @cached_property
    def bigomega(self) -> np.ndarray:
        """Prime factors counted with multiplicity; ``bigomega[0] = 0``."""
        w = np.zeros(self.limit + 1, dtype=np.uint8)
        for p in self.primes:
            q = int(p)
            while q <= self.limit:
                w[q::q] += 1
                q *= int(p)
        w[0] = 0
        w.setflags(write=False)
        return w

    def self_test(self, upto: int = 10_000) -> bool:
        """Compare the bitmap against trial division on ``n <= min(upto, limit)``."""
        for n in range(min(upto, self.limit) + 1):
            trial = n >= 2 and all(n % q for q in range(2, math.isqrt(n) + 1))
            if trial != bool(self.isprime[n]):
                return False
        return True


def _as_rows(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        arr = vectors
    else:
        arr = np.array([tuple(v) for v in vectors], dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 0).astype(np.int64)
    return np.abs(np.asarray(arr, dtype=np.int64))


def _guard(rows: np.ndarray, table: PrimeTable) -> None:
    if rows.size and int(rows.max()) > table.limit:
        raise PrimeTableTooSmall(
            f"curvature {int(rows.max())} exceeds the prime table limit {table.limit}"
        )


def count_prime_vectors(vectors, table: PrimeTable, k: int = 1, mode: str = "coords", root=None) -> int:
    """Vectors with at least ``k`` prime coordinates (absolute values).

    ``mode="new"`` instead counts vectors whose largest entry, the curvature
    introduced by the last move, is prime; ``root`` is skipped there since
    it has no last move.
    """
    if mode not in ("coords", "new"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "new":
        vectors = [v for v in vectors if root is None or tuple(v) != tuple(root)]
        if not vectors:
            return 0
        signed = np.array([tuple(v) for v in vectors], dtype=np.int64)
        top = np.abs(signed.max(axis=1))
        _guard(top, table)
        return int(table.isprime[top].sum())
    rows = _as_rows(vectors)
    if rows.size == 0:
        return 0
    _guard(rows, table)
    return int((table.isprime[rows].sum(axis=1) >= k).sum())


def almost_prime_count(vectors, table: PrimeTable, k: int, r: int) -> int:
    """Vectors with at least ``k`` coordinates ``|x| > 1`` having ``Omega(|x|) <= r``."""
    if r < 1:
        raise ValueError("r must be at least 1")
    rows = _as_rows(vectors)
    if rows.size == 0:
        return 0
    _guard(rows, table)
    ok = (table.bigomega[rows] <= r) & (rows > 1)
    return int((ok.sum(axis=1) >= k).sum())


def h_from_g(g) -> Fraction:
    """``h(p) = g(p) / (1 - g(p))``, exact."""
    g = Fraction(g)
    if g == 1:
        raise ValueError("h has a pole at g = 1")
    if not 0 <= g < 1:
        raise ValueError(f"density {g} outside [0, 1)")
    return g / (1 - g)


def _spf(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if spf[p] == 0:
            spf[p::p] = np.where(spf[p::p] == 0, p, spf[p::p])
    return spf


def squarefree_h(g: Callable[[int], object], bound: int, good: set[int] | None = None, exact: bool = False):
    """Yield ``(d, h(d))`` for squarefree ``1 <= d < bound`` built from good primes."""
    spf = _spf(max(bound - 1, 1))
    one = Fraction(1) if exact else 1.0
    h = {1: one}
    hp: dict[int, object] = {}
    yield 1, one
    for d in range(2, bound):
        p = int(spf[d])
        m = d // p
        if m % p == 0 or m not in h:
            continue
        if good is not None and p not in good:
            continue
        if p not in hp:
            v = h_from_g(g(p)) if exact else float(h_from_g(g(p)))
            hp[p] = v
        h[d] = hp[p] * h[m]
        yield d, h[d]


def selberg_main_term(
    g: Callable[[int], object],
    D: float,
    primes: Iterable[int] | None = None,
    exact: bool = False,
) -> tuple[object, object]:
    """``(sum_{d < sqrt D, d | P} h(d), its reciprocal)``.

    ``primes`` lists the good primes dividing ``P``; by default every
    prime below ``sqrt(D)`` is good.
    """
    if D < 4:
        raise ValueError("D must be at least 4")
    good = None
    if primes is not None:
        good = {int(p) for p in primes}
        if not good:
            raise ValueError("empty good-prime set")
    dmax = math.isqrt(math.ceil(D) - 1)  # d < sqrt(D) <=> d*d <= ceil(D) - 1
    total = sum(v for _, v in squarefree_h(g, dmax + 1, good, exact))
    return total, (1 / total if not exact else Fraction(1) / total)


def _exponents(d: int) -> list[int]:
    if d < 1:
        raise ValueError("argument must be a positive integer")
    return list(sympy.factorint(d).values())


def tau3(d: int) -> int:
    """Ordered factorisations ``d = a*b*c``."""
    return math.prod(math.comb(a + 2, 2) for a in _exponents(d))


def omega(d: int) -> int:
    return len(_exponents(d))


def divisor_count(d: int) -> int:
    return math.prod(a + 1 for a in _exponents(d))


def sum_k_omega(k: int, x: int, table: PrimeTable | None = None) -> int:
    """Exact ``sum_{n <= x} k^omega(n)``."""
    x = int(x)
    if x < 1:
        raise ValueError("x must be at least 1")
    if table is None or table.limit < x:
        table = PrimeTable(x)
    hist = np.bincount(table.omega[1 : x + 1])
    return sum(int(c) * k**w for w, c in enumerate(hist))


def c_k0(k: int, limit: int = 10**6, table: PrimeTable | None = None) -> float:
    """Truncated Euler product for the leading constant of ``sum k^omega(n)``."""
    if table is None or table.limit < limit:
        table = PrimeTable(limit)
    p = table.primes[table.primes <= limit].astype(float)
    log = np.sum(np.log1p(k / (p - 1)) + k * np.log1p(-1 / p))
    return math.exp(log) / math.factorial(k - 1)


def _a_k(k: int, p: np.ndarray) -> np.ndarray:
    return np.where(p > k, 1 - k / p, 1.0)


@dataclass
class MertensResult:
    k: int
    x: float
    product: float
    exact_product: Fraction | None
    B_k: float
    target: float
    ratio: float


def mertens_product(k: int, x: float, table: PrimeTable | None = None, euler_limit: int | None = None,
                    exact: bool = False) -> MertensResult:
    """``prod_{p <= x} A_k(p)`` against ``B_k e^{-k gamma} (log x)^{-k}``.

    ``B_k`` is the Euler product ``prod A_k(p) (1 - 1/p)^{-k}`` truncated at
    ``euler_limit`` (default ``x``).
    """
    if x < 2:
        raise ValueError("x must be at least 2")
    lim = int(max(x, euler_limit or 0))
    if table is None or table.limit < lim:
        table = PrimeTable(lim)
    ps = table.primes
    p = ps[ps <= x].astype(float)
    prod = float(np.exp(np.sum(np.log(_a_k(k, p)))))
    exact_prod = None
    if exact:
        exact_prod = Fraction(1)
        for q in ps[ps <= x]:
            q = int(q)
            if q > k:
                exact_prod *= Fraction(q - k, q)
    pe = ps[ps <= (euler_limit or x)].astype(float)
    b_k = float(np.exp(np.sum(np.log(_a_k(k, pe)) - k * np.log1p(-1 / pe))))
    target = b_k * math.exp(-k * EULER_GAMMA) * math.log(x) ** (-k)
    return MertensResult(k, x, prod, exact_prod, b_k, target, prod / target)


@dataclass
class SieveReport:
    D: int
    z: int
    h_sum: float
    main_term: float
    tau3_weight_sum: int
    remainder: str = "not evaluated"
    mertens: list[dict] = field(default_factory=list)
    h_sum_over_log_D: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=str)


def sieve_report(
    D: int,
    g: Callable[[int], object] | None = None,
    z: int | None = None,
    bad_primes: Sequence[int] = (),
    mertens_k: Sequence[int] = (1, 2),
    mertens_x: int = 10**6,
) -> SieveReport:
    """Main-term factor and ``tau_3`` weight skeleton of the upper-bound sieve.

    ``P`` is the product of the good primes below ``z`` (default ``D``).
    The remainder sum needs the smoothed orbit counts and is not evaluated.
    """
    if g is None:
        g = lambda p: Fraction(1, p)  # noqa: E731
    z = int(z or D)
    table = PrimeTable(max(D, z, mertens_x))
    bad = set(int(p) for p in bad_primes)
    good = [int(p) for p in table.primes if p < z and int(p) not in bad]
    h_sum, main = selberg_main_term(g, D, primes=good)
    goodmask = np.zeros(table.limit + 1, dtype=bool)
    goodmask[good] = True
    # squarefree d < D over good primes: tau_3(d) = 3^omega(d)
    ok = np.ones(D, dtype=bool)
    ok[0] = False
    for p in table.primes[table.primes < D]:
        p = int(p)
        if not goodmask[p]:
            ok[p::p] = False
        if p * p < D:
            ok[p * p :: p * p] = False
    w = table.omega[:D][ok]
    tau_sum = sum(int(c) * 3**e for e, c in enumerate(np.bincount(w)))
    mert = [asdict(mertens_product(k, mertens_x, table)) for k in mertens_k]
    return SieveReport(D, z, float(h_sum), float(main), tau_sum, mertens=mert,
                       h_sum_over_log_D=float(h_sum) / math.log(D))
