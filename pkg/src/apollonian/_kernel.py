"""Code-generated numba kernels for the canonical orbit tree.

The orbit of a reduced root is a tree under the greedy parent map (replace
the largest curvature by its companion).  Coordinate permutations that fix
the root permute the orbit, so the kernel walks only representatives that
are sorted inside each block of equal root entries and weights every
representative by the size of its permutation class.

A kernel is specialised per (arity, coefficient, block pattern, norm,
statistics) so that every block boundary is a compile-time constant.  The
generated source is written to a cache directory and imported from there,
which lets numba's on-disk cache skip recompilation in later processes.
"""

from __future__ import annotations

import hashlib
import importlib.util
import math
import os
import sys
import tempfile
from functools import lru_cache
from pathlib import Path

KERNEL_VERSION = 3


def cache_dir() -> Path:
    root = os.environ.get("APOLLONIAN_KERNEL_CACHE")
    path = Path(root) if root else Path(tempfile.gettempdir()) / f"apollonian-kernels-v{KERNEL_VERSION}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def blocks_of(root: tuple[int, ...]) -> tuple[tuple[int, int], ...]:
    """Maximal runs of equal adjacent entries, as half-open index ranges."""
    out = []
    i = 0
    while i < len(root):
        j = i
        while j < len(root) and root[j] == root[i]:
            j += 1
        out.append((i, j))
        i = j
    return tuple(out)


def group_order(blocks) -> int:
    return math.prod(math.factorial(b - a) for a, b in blocks)


def _source(arity: int, coef: int, blocks, norm: str, primes: bool, almost: bool) -> str:
    A = arity
    G = group_order(blocks)
    blk = {}
    for b, (a, z) in enumerate(blocks):
        for q in range(a, z):
            blk[q] = b
    L = []
    emit = L.append
    emit("import numpy as np")
    emit("import numba as nb")
    emit("")
    emit("@nb.njit(cache=True, boundscheck=False, nogil=True)")
    emit(
        "def kernel(st, sd, sp, bound, thr, counts, hist, depth, pk, newp, isprime,"
        " apk, bigomega):"
    )
    emit("    nbk = thr.shape[0]")
    emit("    nhist = hist.shape[0]")
    emit("    ndepth = depth.shape[0]")
    if almost:
        emit("    rmax = apk.shape[1]")
    emit("    cap = st.shape[0]")
    emit("    nviol = 0")
    emit("    while sp > 0:")
    emit(f"        if sp + {A} >= cap:")
    emit("            return sp, nviol")
    emit("        sp -= 1")
    ind = " " * 8
    for q in range(A):
        emit(f"{ind}u{q} = st[sp, {q}]")
    emit(f"{ind}du = sd[sp] + 1")
    if primes:
        emit(f"{ind}kpu = st[sp, {A}]")
    emit(f"{ind}s = " + " + ".join(f"u{q}" for q in range(A)))
    if norm == "euclidean":
        emit(f"{ind}n2 = " + " + ".join(f"u{q} * u{q}" for q in range(A)))
    for i in range(A):
        b = blk[i]
        bs, be = blocks[b]
        emit(f"{ind}# replace position {i} (block {b})")
        cond = f"u{i} != u{i - 1}" if i > bs else "True"
        emit(f"{ind}if {cond}:")
        i2 = ind + "    "
        emit(f"{i2}x = u{i}")
        emit(f"{i2}w = {coef} * s - {coef + 1} * x")
        emit(f"{i2}if w > x:")
        i3 = i2 + "    "
        emit(f"{i3}if x < -w:")
        emit(f"{i3}    nviol += 1")
        if norm == "euclidean":
            emit(f"{i3}n2c = n2 - x * x + w * w")
            within = "n2c < bound"
        else:
            within = "w < bound and -w < bound"
        # acceptance: w is the overall maximum and the first maximum lies in block b
        acc = []
        for bb, (a2, z2) in enumerate(blocks):
            last = z2 - 1
            if bb == b:
                if last != i:
                    acc.append(f"u{last} <= w")
            elif bb < b:
                acc.append(f"u{last} < w")
            else:
                acc.append(f"u{last} <= w")
        cond = " and ".join([within] + acc)
        emit(f"{i3}if {cond}:")
        i4 = i3 + "    "
        child = {}
        members = [q for q in range(bs, be) if q != i]
        for q in range(A):
            if blk[q] != b:
                child[q] = f"u{q}"
        for k, q in enumerate(members):
            child[bs + k] = f"u{q}"
        child[be - 1] = "w"
        for q in range(A):
            emit(f"{i4}c{q} = {child[q]}")
        emit(f"{i4}wgt = {G}")
        for a2, z2 in blocks:
            if z2 - a2 < 2:
                continue
            emit(f"{i4}r = 1")
            for q in range(a2 + 1, z2):
                emit(f"{i4}if c{q} == c{q - 1}:")
                emit(f"{i4}    r += 1")
                emit(f"{i4}    wgt //= r")
                emit(f"{i4}else:")
                emit(f"{i4}    r = 1")
        if norm == "euclidean":
            emit(f"{i4}nrm = n2c")
        else:
            firsts = [f"c{a2}" for a2, z2 in blocks]
            emit(f"{i4}mn = " + (f"min({', '.join(firsts)})" if len(firsts) > 1 else firsts[0]))
            emit(f"{i4}nrm = w")
            emit(f"{i4}if -mn > nrm:")
            emit(f"{i4}    nrm = -mn")
        emit(f"{i4}j = nbk")
        emit(f"{i4}while j > 0 and nrm < thr[j - 1]:")
        emit(f"{i4}    j -= 1")
        emit(f"{i4}counts[j] += wgt")
        emit(f"{i4}aw = w if w >= 0 else -w")
        emit(f"{i4}if j < nbk:")
        emit(f"{i4}    if aw < nhist:")
        emit(f"{i4}        hist[aw] += wgt")
        emit(f"{i4}    if du < ndepth:")
        emit(f"{i4}        depth[du] += wgt")
        if primes:
            emit(f"{i4}ax = x if x >= 0 else -x")
            emit(f"{i4}kp = kpu - isprime[ax] + isprime[aw]")
            emit(f"{i4}pk[j, kp] += wgt")
            emit(f"{i4}if isprime[aw]:")
            emit(f"{i4}    newp[j] += wgt")
        if almost:
            for q in range(A):
                emit(f"{i4}a{q} = c{q} if c{q} >= 0 else -c{q}")
            for q in range(A):
                emit(f"{i4}o{q} = bigomega[a{q}] if a{q} > 1 else 127")
            emit(f"{i4}for r1 in range(rmax):")
            emit(
                f"{i4}    ka = "
                + " + ".join(f"(1 if o{q} <= r1 + 1 else 0)" for q in range(A))
            )
            emit(f"{i4}    apk[j, r1, ka] += wgt")
        # push when some further move could stay inside the bound
        emit(f"{i4}sc = s - x + w")
        emit(f"{i4}grow = False")
        for q in range(A):
            emit(f"{i4}t = {coef} * sc - {coef + 1} * c{q}")
            if norm == "euclidean":
                emit(f"{i4}if not grow and t > c{q} and n2c - c{q} * c{q} + t * t < bound:")
            else:
                emit(f"{i4}if not grow and t > c{q} and t < bound and -t < bound:")
            emit(f"{i4}    grow = True")
        emit(f"{i4}if grow:")
        for q in range(A):
            emit(f"{i4}    st[sp, {q}] = c{q}")
        if primes:
            emit(f"{i4}    st[sp, {A}] = kp")
        emit(f"{i4}    sd[sp] = du")
        emit(f"{i4}    sp += 1")
    emit("    return 0, nviol")
    emit("")
    return "\n".join(L) + "\n"


@lru_cache(maxsize=None)
def get_kernel(arity: int, coef: int, blocks, norm: str, primes: bool, almost: bool):
    """Compile (or load from cache) the kernel for one configuration."""
    if norm not in ("max", "euclidean"):
        raise ValueError(f"unknown norm {norm!r}")
    src = _source(arity, coef, blocks, norm, primes, almost)
    digest = hashlib.sha256(src.encode()).hexdigest()[:16]
    name = f"apollonian_kernel_{digest}"
    path = cache_dir() / f"{name}.py"
    if not path.exists() or path.read_text() != src:
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(src)
        os.replace(tmp, path)
    if name in sys.modules:
        return sys.modules[name].kernel
    spec = importlib.util.spec_from_file_location(name, path)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    return mod.kernel
