"""Orbits of the Apollonian group modulo a squarefree ``d`` and their sieve densities.

A residue vector ``(v_0, ..., v_{m-1})`` mod ``d`` is encoded as the
integer ``sum v_i d^i``; the closure runs as a breadth-first search over
codes with a ``d^m``-bit visited set, so ``d = 77`` (about 3.5e7 states for
the standard roots) fits comfortably in memory.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numba as nb
import numpy as np
import sympy

from .descartes import GeneratorSet, as_vector

BRUTE_FORCE_LIMIT = 31


@nb.njit(cache=True)
def _decode(code, d, m, out):
    for i in range(m):
        out[i] = code % d
        code //= d


@nb.njit(cache=True)
def _bfs(queue, head, tail, seen, d, m, coef, pw):
    """Advance the closure; returns ``(head, tail)`` and stops early when the queue is full."""
    cap = queue.shape[0]
    v = np.empty(m, np.int64)
    while head < tail:
        if tail + m > cap:
            return head, tail
        code = queue[head]
        head += 1
        _decode(code, d, m, v)
        s = 0
        for i in range(m):
            s += v[i]
        for i in range(m):
            x = v[i]
            w = (coef * (s - x) - x) % d
            if w == x:
                continue
            c2 = code + (w - x) * pw[i]
            byte = c2 >> 3
            bit = np.uint8(1) << np.uint8(c2 & 7)
            if seen[byte] & bit == 0:
                seen[byte] |= bit
                queue[tail] = c2
                tail += 1
    return head, tail


@nb.njit(cache=True)
def _zero_counts(codes, d, m, primes):
    """``out[k-1]`` = codes whose first ``k`` entries have product 0 mod every prime of ``d``."""
    out = np.zeros(m, np.int64)
    v = np.empty(m, np.int64)
    np_ = primes.shape[0]
    hit = np.empty(np_, np.bool_)
    for c in codes:
        _decode(c, d, m, v)
        for j in range(np_):
            hit[j] = False
        for k in range(m):
            for j in range(np_):
                if v[k] % primes[j] == 0:
                    hit[j] = True
            allhit = True
            for j in range(np_):
                if not hit[j]:
                    allhit = False
            if allhit:
                out[k] += 1
    return out


@nb.njit(cache=True)
def _cone_count(d, m, n):
    total = 0
    idx = np.zeros(m, np.int64)
    size = d**m
    for _ in range(size):
        s = 0
        s2 = 0
        for i in range(m):
            s += idx[i]
            s2 += idx[i] * idx[i]
        if (n * s2 - s * s) % d == 0:
            total += 1
        i = 0
        while i < m:
            idx[i] += 1
            if idx[i] < d:
                break
            idx[i] = 0
            i += 1
    return total


def prime_factors(d: int) -> list[int]:
    return sorted(sympy.factorint(d))


def is_squarefree(d: int) -> bool:
    return all(e == 1 for e in sympy.factorint(d).values())


class ResidueOrbit:
    """Sorted array of encoded residue vectors forming one orbit mod ``d``."""

    def __init__(self, d: int, arity: int, codes: np.ndarray):
        self.d = d
        self.arity = arity
        self.codes = codes
        self.codes.setflags(write=False)

    def __len__(self) -> int:
        return len(self.codes)

    def encode(self, v: Sequence[int]) -> int:
        return sum((int(x) % self.d) * self.d**i for i, x in enumerate(v))

    def __contains__(self, v) -> bool:
        c = self.encode(v)
        i = np.searchsorted(self.codes, c)
        return bool(i < len(self.codes) and self.codes[i] == c)

    def vectors(self) -> np.ndarray:
        """Decoded rows (for small ``d``)."""
        out = np.empty((len(self.codes), self.arity), dtype=np.int64)
        c = self.codes.copy()
        for i in range(self.arity):
            out[:, i] = c % self.d
            c //= self.d
        return out

    def as_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(x) for x in r) for r in self.vectors()}

    def is_closed(self, coef: int) -> bool:
        """One full pass: every generator image is again in the orbit."""
        d, m = self.d, self.arity
        pw = d ** np.arange(m, dtype=np.int64)
        for lo in range(0, len(self.codes), 1 << 22):
            part = self.codes[lo : lo + (1 << 22)]
            digits = (part[:, None] // pw) % d
            s = digits.sum(axis=1)
            for i in range(m):
                x = digits[:, i]
                w = (coef * (s - x) - x) % d
                img = part + (w - x) * pw[i]
                pos = np.searchsorted(self.codes, img)
                pos = np.minimum(pos, len(self.codes) - 1)
                if not np.all(self.codes[pos] == img):
                    return False
        return True


def orbit_mod(root: Sequence[int], gens: GeneratorSet | None, d: int) -> ResidueOrbit:
    """Closure of ``root mod d`` under the generators mod ``d``."""
    root = as_vector(root, exact=True)
    m = len(root)
    gens = gens or GeneratorSet(m - 2)
    if gens.arity != m:
        raise ValueError("generator set and root disagree on arity")
    if d < 1:
        raise ValueError("modulus must be positive")
    if d > 1 and not is_squarefree(d):
        warnings.warn(f"modulus {d} is not squarefree; computing the orbit anyway", stacklevel=2)
    if d**m >= 2**62:
        raise ValueError(f"modulus {d} too large for the encoded search")
    pw = np.array([d**i for i in range(m)], dtype=np.int64)
    start = sum((x % d) * int(pw[i]) for i, x in enumerate(root))
    seen = np.zeros(d**m // 8 + 1, dtype=np.uint8)
    seen[start >> 3] |= 1 << (start & 7)
    queue = np.empty(1 << 12, dtype=np.int64)
    queue[0] = start
    head, tail = 0, 1
    while True:
        head, tail = _bfs(queue, head, tail, seen, d, m, gens.coefficient, pw)
        if head >= tail:
            break
        queue = np.concatenate([queue, np.empty_like(queue)])
    codes = np.sort(queue[:tail])
    return ResidueOrbit(d, m, codes)


def count_zero_locus(orbit, k: int, d: int | None = None) -> int:
    """``#{w in orbit : w_1 ... w_k = 0 mod p for every prime p | d}``.

    ``orbit`` is a :class:`ResidueOrbit` or any iterable of residue tuples
    (then ``d`` is required).
    """
    if isinstance(orbit, ResidueOrbit):
        d, m = orbit.d, orbit.arity
        if not 1 <= k <= m:
            raise ValueError(f"k must lie in 1..{m}")
        ps = np.array(prime_factors(d) or [1], dtype=np.int64)
        return int(_zero_counts(orbit.codes, d, m, ps)[k - 1])
    if d is None:
        raise ValueError("d is required for a plain set of residue vectors")
    vecs = [tuple(v) for v in orbit]
    if not vecs:
        raise ValueError("orbit is empty")
    m = len(vecs[0])
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in 1..{m}")
    ps = prime_factors(d) or [1]
    return sum(1 for v in vecs if all(math.prod(v[:k]) % p == 0 for p in ps))


@dataclass(frozen=True)
class CongruenceOrbitStats:
    d: int
    orbit_size: int
    zero_counts: tuple[int, ...]
    g: tuple[Fraction, ...]

    def csv_row(self) -> list[str]:
        row = [str(self.d), str(self.orbit_size)] + [str(z) for z in self.zero_counts]
        for g in self.g:
            row += [str(g.numerator), str(g.denominator)]
        return row


def csv_header(arity: int = 5) -> list[str]:
    head = ["d", "orbit_size"] + [f"O0_{k}" for k in range(1, arity + 1)]
    for k in range(1, arity + 1):
        head += [f"g{k}_num", f"g{k}_den"]
    return head


def congruence_stats(root: Sequence[int], d: int, gens: GeneratorSet | None = None,
                     orbit: ResidueOrbit | None = None) -> CongruenceOrbitStats:
    root = as_vector(root, exact=True)
    m = len(root)
    if d == 1:
        return CongruenceOrbitStats(1, 1, (1,) * m, (Fraction(1),) * m)
    orbit = orbit or orbit_mod(root, gens, d)
    ps = np.array(prime_factors(d), dtype=np.int64)
    zc = tuple(int(x) for x in _zero_counts(orbit.codes, d, m, ps))
    return CongruenceOrbitStats(d, len(orbit), zc, tuple(Fraction(z, len(orbit)) for z in zc))


def g_ratio(stats: CongruenceOrbitStats, k: int) -> Fraction:
    if stats.orbit_size <= 0:
        raise ValueError("empty orbit")
    return Fraction(stats.zero_counts[k - 1], stats.orbit_size)


def brute_force_cone(d: int, n: int = 3, override: bool = False) -> int:
    """``#{v in (Z/d)^(n+2) : Q_n(v) = 0 mod d}`` by exhaustive scan."""
    if d < 1:
        raise ValueError("modulus must be positive")
    if d == 1:
        return 1
    if d > BRUTE_FORCE_LIMIT and not override:
        raise ValueError(f"d = {d} exceeds the scan guard {BRUTE_FORCE_LIMIT}; pass override=True")
    return int(_cone_count(d, n + 2, n))


@dataclass(frozen=True)
class MultiplicativityCheck:
    d1: int
    d2: int
    k: int
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def check_multiplicativity(root, gens, d1: int, d2: int, k: int) -> MultiplicativityCheck:
    """Exact comparison of ``g_k(d1 d2)`` with ``g_k(d1) g_k(d2)``."""
    if math.gcd(d1, d2) != 1:
        raise ValueError("moduli must be coprime")
    g = lambda d: g_ratio(congruence_stats(root, d, gens), k)  # noqa: E731
    return MultiplicativityCheck(d1, d2, k, g(d1 * d2), g(d1) * g(d2))


@dataclass(frozen=True)
class SurjectivityCheck:
    d1: int
    d2: int
    size: int
    size1: int
    size2: int
    projects_into: bool

    @property
    def surjective(self) -> bool:
        return self.projects_into and self.size == self.size1 * self.size2


def crt_surjectivity(root, gens, d1: int, d2: int) -> SurjectivityCheck:
    """Does ``orbit mod d1 d2`` fill ``orbit mod d1 x orbit mod d2`` under CRT?

    CRT makes the reduction map injective, so equality of sizes together
    with the image landing in the product is equivalent to surjectivity.
    """
    if math.gcd(d1, d2) != 1:
        raise ValueError("moduli must be coprime")
    big = orbit_mod(root, gens, d1 * d2)
    o1, o2 = orbit_mod(root, gens, d1), orbit_mod(root, gens, d2)
    m = big.arity
    ok = True
    d = d1 * d2
    for lo in range(0, len(big.codes), 1 << 22):
        part = big.codes[lo : lo + (1 << 22)]
        digits = (part[:, None] // (d ** np.arange(m, dtype=np.int64))) % d
        for sub in (o1, o2):
            img = ((digits % sub.d) * (sub.d ** np.arange(m, dtype=np.int64))).sum(axis=1)
            pos = np.minimum(np.searchsorted(sub.codes, img), len(sub.codes) - 1)
            ok &= bool(np.all(sub.codes[pos] == img))
    return SurjectivityCheck(d1, d2, len(big), len(o1), len(o2), ok)


@dataclass
class BadPrimeReport:
    flagged: list[int]
    reasons: dict[int, list[str]]


def detect_bad_primes(root, primes: Iterable[int], gens=None, partner_limit: int = 7,
                      ks: Sequence[int] = (1, 2)) -> BadPrimeReport:
    """Flag primes where the expected local behaviour fails.

    A prime is flagged when ``g_k(p)`` leaves ``(0, 1)`` or when CRT
    surjectivity or exact multiplicativity fails against every tested
    partner (so one bad prime does not taint the good ones).
    """
    primes = sorted(set(int(p) for p in primes))
    reasons: dict[int, list[str]] = {p: [] for p in primes}
    stats = {p: congruence_stats(root, p, gens) for p in primes}
    for p, st in stats.items():
        for k in ks:
            g = g_ratio(st, k)
            if not 0 < g < 1:
                reasons[p].append(f"g_{k}({p}) = {g} outside (0, 1)")
    small = [p for p in primes if p <= partner_limit]
    fails: dict[int, int] = {p: 0 for p in primes}
    tried: dict[int, int] = {p: 0 for p in primes}
    for i, p in enumerate(small):
        for q in small[i + 1 :]:
            sc = crt_surjectivity(root, gens, p, q)
            good = sc.surjective
            if good:
                big = congruence_stats(root, p * q, gens)
                good = all(g_ratio(big, k) == g_ratio(stats[p], k) * g_ratio(stats[q], k) for k in ks)
            for r in (p, q):
                tried[r] += 1
                fails[r] += 0 if good else 1
    for p in primes:
        if tried[p] and fails[p] == tried[p]:
            reasons[p].append(f"CRT or multiplicativity failed against all {tried[p]} partners")
    flagged = [p for p in primes if reasons[p]]
    return BadPrimeReport(flagged, {p: r for p, r in reasons.items() if r})


def write_csv(path, rows: Iterable[CongruenceOrbitStats], arity: int = 5, header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(arity))
        for st in rows:
            w.writerow(st.csv_row())
