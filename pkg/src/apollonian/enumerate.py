"""Counting the orbit ``{v in v0 A : ||v|| < T}``.

Two engines produce the same counts:

``tree``
    Greedy reduction (replace the largest curvature by its companion) sends
    every orbit vector to the root without increasing its norm, so the
    orbit inside a norm ball is a rooted tree.  We walk only the
    representatives that are sorted inside each block of equal root
    entries and weight them by the size of their permutation class.  The
    walk is split into independent subtrees, run by compiled kernels
    (optionally in several processes), and the per-task results are summed,
    so the census does not depend on scheduling.

``bfs``
    Plain breadth-first search on distinct vectors with an exploration
    margin ``slack``.  Since generators are involutions, the neighbours of
    level ``k`` lie in levels ``k - 1``, ``k`` and ``k + 1``; deduplicating
    against the two previous levels is therefore exact and keeps memory
    proportional to the widest three levels.  This is the oracle for the
    tree engine and the tool for connectivity checks.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import resource
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from ._kernel import blocks_of, get_kernel, group_order
from .descartes import (
    CurvatureOverflowError,
    DescartesForm,
    GeneratorSet,
    as_vector,
    eval_form,
    is_reduced,
)
from .primes import PrimeTable

KERNEL_LIMIT = 2**59
TASK_TARGET = 256
BYTES_PER_VECTOR = 120


class MemoryCapExceeded(MemoryError):
    """The run outgrew its byte budget; ``census`` holds what was counted so far."""

    def __init__(self, message: str, census: "OrbitCensus"):
        super().__init__(message)
        self.census = census


class ResumeMismatch(ValueError):
    """A resume state belongs to a different configuration."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _fmt(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def dyadic_checkpoints(T, smallest: int = 16) -> tuple[Fraction, ...]:
    """``T * 2^(j - m)`` for ``j = 1..m``, stopping once below ``smallest``."""
    T = _frac(T)
    out = [T]
    while out[-1] / 2 >= smallest:
        out.append(out[-1] / 2)
    return tuple(reversed(out))


@dataclass(frozen=True)
class EnumerationConfig:
    root: tuple[int, ...]
    T: int
    norm: str = "max"
    slack: Fraction = Fraction(1)
    workers: int = 1
    memory_cap: int | None = None
    checkpoints: tuple[Fraction, ...] | None = None
    engine: str = "auto"
    primes: bool = False
    almost_r: int = 0

    def __post_init__(self) -> None:
        root = as_vector(self.root, exact=True)
        object.__setattr__(self, "root", root)
        if len(root) not in (4, 5):
            raise ValueError("roots have 4 (circles) or 5 (spheres) curvatures")
        form = DescartesForm(len(root) - 2)
        q = eval_form(form, root, exact=True)
        if q != 0:
            raise ValueError(f"root {root} is off the cone (Q = {q})")
        if not is_reduced(GeneratorSet(form.n), root):
            raise ValueError(f"root {root} is not reduced; reduce it first")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError("T must be a positive integer")
        object.__setattr__(self, "T", int(self.T))
        if self.norm not in ("max", "euclidean"):
            raise ValueError(f"unknown norm {self.norm!r}")
        slack = _frac(self.slack)
        if slack < 1:
            raise ValueError("slack must be at least 1")
        object.__setattr__(self, "slack", slack)
        if self.workers < 1:
            raise ValueError("worker count must be positive")
        if self.engine not in ("auto", "tree", "bfs", "python"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.almost_r < 0:
            raise ValueError("almost_r must be non-negative")
        cps = self.checkpoints
        cps = dyadic_checkpoints(self.T) if cps is None else tuple(sorted({_frac(c) for c in cps}))
        if cps and (cps[0] <= 0 or cps[-1] > self.T):
            raise ValueError("checkpoints must lie in (0, T]")
        if not cps or cps[-1] != self.T:
            cps += (Fraction(self.T),)
        object.__setattr__(self, "checkpoints", cps)

    @property
    def n(self) -> int:
        return len(self.root) - 2

    def thresholds(self) -> np.ndarray:
        """Integer bounds ``b_j`` with ``||v|| < T_j  <=>  norm_value(v) < b_j``."""
        if self.norm == "max":
            return np.array([math.ceil(c) for c in self.checkpoints], dtype=np.int64)
        return np.array([math.ceil(c * c) for c in self.checkpoints], dtype=np.int64)

    def fingerprint(self) -> str:
        """Digest of everything that determines the census (not workers or caps)."""
        canon = {
            "root": list(self.root),
            "T": self.T,
            "norm": self.norm,
            "slack": str(self.slack),
            "checkpoints": [str(c) for c in self.checkpoints],
            "engine": self.resolved_engine(),
            "primes": self.primes,
            "almost_r": self.almost_r,
        }
        return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()[:16]

    def resolved_engine(self) -> str:
        if self.engine != "auto":
            return self.engine
        top = self.T if self.norm == "max" else self.T * self.T
        return "tree" if top < KERNEL_LIMIT else "python"


def norm_value(v: Sequence[int], norm: str) -> int:
    """Max of ``|v_i|``, or the squared Euclidean norm."""
    if norm == "max":
        return max(abs(x) for x in v)
    return sum(x * x for x in v)


@dataclass
class OrbitCensus:
    """Result of one enumeration run.

    ``counts[j]`` is the number of distinct orbit vectors with norm below
    ``checkpoints[j]``.  ``new_curvatures`` maps the largest entry of each
    non-root vector (the curvature its last move introduced) to its
    multiplicity over the full bound.  ``depth_sizes`` counts vectors by
    reduction-word length (tree engines) and ``frontier_sizes`` by BFS
    level (bfs engine).  ``prime_counts[j][k - 1]`` counts vectors with at
    least ``k`` prime coordinates; ``new_prime_counts[j]`` those whose
    largest entry is prime; ``almost_counts[r][j][k - 1]`` those with at
    least ``k`` coordinates ``|x| > 1`` having at most ``r`` prime factors.
    """

    fingerprint: str
    engine: str
    root: tuple[int, ...]
    norm: str
    checkpoints: tuple[Fraction, ...]
    counts: list[int]
    new_curvatures: dict[int, int] = field(default_factory=dict)
    depth_sizes: list[int] = field(default_factory=list)
    frontier_sizes: list[int] = field(default_factory=list)
    prime_counts: list[list[int]] | None = None
    new_prime_counts: list[int] | None = None
    almost_counts: dict[int, list[list[int]]] | None = None
    violations: int = 0
    partial: bool = False
    tasks_done: int = 0
    tasks_total: int = 0
    elapsed: float = 0.0
    peak_memory: int = 0

    @property
    def total(self) -> int:
        return self.counts[-1]

    def canonical(self) -> dict:
        """Schedule-independent content, the input of :meth:`digest`."""
        return {
            "fingerprint": self.fingerprint,
            "engine": self.engine,
            "root": list(self.root),
            "norm": self.norm,
            "checkpoints": [str(c) for c in self.checkpoints],
            "counts": list(map(int, self.counts)),
            "new_curvatures": sorted((int(k), int(v)) for k, v in self.new_curvatures.items()),
            "depth_sizes": list(map(int, self.depth_sizes)),
            "frontier_sizes": list(map(int, self.frontier_sizes)),
            "prime_counts": self.prime_counts,
            "new_prime_counts": self.new_prime_counts,
            "almost_counts": {str(k): v for k, v in (self.almost_counts or {}).items()},
            "violations": self.violations,
            "partial": self.partial,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()

    def to_json(self) -> str:
        d = self.canonical()
        d.update(elapsed=self.elapsed, peak_memory=self.peak_memory, digest=self.digest(),
                 tasks_done=self.tasks_done, tasks_total=self.tasks_total)
        return json.dumps(d, indent=2)

    def csv_rows(self) -> list[list[str]]:
        head = ["checkpoint", "count"]
        if self.prime_counts is not None:
            head += [f"pi_{k}" for k in range(1, len(self.root) + 1)] + ["pi_new"]
        for r in sorted(self.almost_counts or {}):
            head += [f"almost_{k}_{r}" for k in range(1, len(self.root) + 1)]
        rows = [head]
        for j, c in enumerate(self.checkpoints):
            row = [_fmt(c), str(self.counts[j])]
            if self.prime_counts is not None:
                row += [str(x) for x in self.prime_counts[j]] + [str(self.new_prime_counts[j])]
            for r in sorted(self.almost_counts or {}):
                row += [str(x) for x in self.almost_counts[r][j]]
            rows.append(row)
        return rows


def _peak_rss() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


# ---------------------------------------------------------------------------
# canonical tree, pure Python


class _Layout:
    """Static data of the symmetric canonical tree for one root."""

    def __init__(self, root: tuple[int, ...]):
        self.root = root
        self.arity = len(root)
        self.coef = 2 // (self.arity - 3)
        self.blocks = blocks_of(root)
        self.order = group_order(self.blocks)
        self.block_of = [b for b, (a, z) in enumerate(self.blocks) for _ in range(a, z)]

    def weight(self, v: Sequence[int]) -> int:
        w = self.order
        for a, z in self.blocks:
            for c in Counter(v[a:z]).values():
                w //= math.factorial(c)
        return w

    def children(self, u: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], int, int]]:
        """Canonical children ``(child, x, w)``: ``x`` at some position becomes ``w``."""
        s = sum(u)
        c = self.coef
        for i, x in enumerate(u):
            b = self.block_of[i]
            bs, be = self.blocks[b]
            if i > bs and u[i - 1] == x:
                continue
            w = c * s - (c + 1) * x
            if w <= x:
                continue
            ok = True
            for bb, (a2, z2) in enumerate(self.blocks):
                last = z2 - 1
                if bb == b:
                    if last != i and u[last] > w:
                        ok = False
                elif bb < b:
                    if u[last] >= w:
                        ok = False
                elif u[last] > w:
                    ok = False
            if not ok:
                continue
            members = [u[q] for q in range(bs, be) if q != i]
            child = u[:bs] + tuple(members) + (w,) + u[be:]
            yield child, x, w

    def expand(self, v: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        """All distinct vectors in the permutation class of representative ``v``."""
        parts = []
        for a, z in self.blocks:
            parts.append(sorted(set(permutations(v[a:z]))))
        for combo in product(*parts):
            yield tuple(x for part in combo for x in part)


class _Accumulator:
    """Same arrays the compiled kernel fills."""

    def __init__(self, cfg: EnumerationConfig, table: PrimeTable | None):
        self.cfg = cfg
        self.thr = cfg.thresholds()
        nb = len(self.thr)
        A = len(cfg.root)
        top = int(self.thr[-1])
        self.bound = top
        lin = top if cfg.norm == "max" else math.isqrt(top) + 1
        self.lin = lin
        self.counts = np.zeros(nb + 1, dtype=np.int64)
        self.hist = np.zeros(lin + 1, dtype=np.int64)
        self.depth = np.zeros(A * (lin + max(map(abs, cfg.root))) + 2, dtype=np.int64)
        self.pk = np.zeros((nb + 1, A + 1), dtype=np.int64)
        self.newp = np.zeros(nb + 1, dtype=np.int64)
        self.apk = np.zeros((nb + 1, max(cfg.almost_r, 1), A + 1), dtype=np.int64)
        self.nviol = 0
        self.table = table

    def arrays(self):
        return [self.counts, self.hist, self.depth, self.pk, self.newp, self.apk]

    def add(self, other: "_Accumulator | list[np.ndarray]", nviol: int = 0) -> None:
        arrs = other.arrays() if isinstance(other, _Accumulator) else other
        for mine, theirs in zip(self.arrays(), arrs):
            mine += theirs
        self.nviol += other.nviol if isinstance(other, _Accumulator) else nviol

    def bucket(self, v: Sequence[int]) -> int:
        return int(np.searchsorted(self.thr, norm_value(v, self.cfg.norm), side="right"))

    def within(self, v: Sequence[int]) -> bool:
        return norm_value(v, self.cfg.norm) < self.bound

    def kp(self, v: Sequence[int]) -> int:
        return int(sum(self.table.isprime[abs(x)] for x in v))

    def record(self, v: Sequence[int], wgt: int, dep: int, w: int | None) -> None:
        cfg = self.cfg
        j = self.bucket(v)
        self.counts[j] += wgt
        if j < len(self.thr):
            if w is not None and abs(w) < len(self.hist):
                self.hist[abs(w)] += wgt
            if dep < len(self.depth):
                self.depth[dep] += wgt
        if cfg.primes:
            self.pk[j, self.kp(v)] += wgt
            if w is not None and self.table.isprime[abs(w)]:
                self.newp[j] += wgt
        if cfg.almost_r:
            om = self.table.bigomega
            for r1 in range(cfg.almost_r):
                ka = sum(1 for x in v if abs(x) > 1 and om[abs(x)] <= r1 + 1)
                self.apk[j, r1, ka] += wgt


def _grows(lay: _Layout, v: tuple[int, ...], acc: _Accumulator) -> bool:
    s = sum(v)
    c = lay.coef
    for q, x in enumerate(v):
        t = c * s - (c + 1) * x
        if t > x and acc.within(v[:q] + (t,) + v[q + 1:]):
            return True
    return False


def _python_tree(lay: _Layout, acc: _Accumulator, start: list[tuple[tuple[int, ...], int]],
                 limit: int | None = None) -> list[tuple[tuple[int, ...], int]]:
    """Breadth-first walk of the canonical tree from ``start`` nodes.

    Start nodes are assumed recorded already.  Stops once the open frontier
    holds at least ``limit`` nodes and returns it (empty when finished).
    """
    frontier = [(v, d) for v, d in start if _grows(lay, v, acc)]
    while frontier and (limit is None or len(frontier) < limit):
        nxt = []
        for u, du in frontier:
            for child, x, w in lay.children(u):
                if not acc.within(child):
                    continue
                if x < -w:
                    acc.nviol += 1
                acc.record(child, lay.weight(child), du + 1, w)
                if _grows(lay, child, acc):
                    nxt.append((child, du + 1))
        frontier = nxt
    return frontier


def iter_orbit(root: Sequence[int], T: int, norm: str = "max") -> Iterator[tuple[int, ...]]:
    """Every distinct orbit vector with norm below ``T`` (exact integers, any order)."""
    cfg = EnumerationConfig(tuple(root), T, norm=norm, engine="python")
    lay = _Layout(cfg.root)
    acc = _Accumulator(cfg, None)
    if not acc.within(cfg.root):
        return
    stack = [cfg.root]
    while stack:
        u = stack.pop()
        yield from lay.expand(u)
        for child, _, _ in lay.children(u):
            if acc.within(child):
                stack.append(child)


def sorted_orbit(root: Sequence[int], T: int, norm: str = "max") -> np.ndarray:
    """The orbit ball as an int64 array sorted lexicographically by row."""
    rows = np.array(list(iter_orbit(root, T, norm)), dtype=np.int64)
    if rows.size == 0:
        return rows.reshape(0, len(root))
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def write_stream(path, rows: np.ndarray, header: str | None = None) -> None:
    """Tab-separated vectors, one per line, LF endings."""
    with open(path, "w", newline="\n") as fh:
        if header:
            fh.write(header + "\n")
        for r in rows:
            fh.write("\t".join(map(str, r)) + "\n")


# ---------------------------------------------------------------------------
# tree engine driver


def _prime_table(cfg: EnumerationConfig) -> PrimeTable | None:
    if not (cfg.primes or cfg.almost_r):
        return None
    top = int(cfg.thresholds()[-1])
    lin = top if cfg.norm == "max" else math.isqrt(top) + 1
    return PrimeTable(max(lin, max(map(abs, cfg.root))) + 1)


def _run_tasks(cfg, table, tasks: np.ndarray, depths: np.ndarray) -> tuple[list[np.ndarray], int]:
    """Run the compiled kernel on a batch of subtree roots; returns summed arrays."""
    lay = _Layout(cfg.root)
    acc = _Accumulator(cfg, table)
    kern = get_kernel(lay.arity, lay.coef, lay.blocks, cfg.norm, cfg.primes, bool(cfg.almost_r))
    A = lay.arity
    isprime = table.isprime if table is not None else np.zeros(1, np.uint8)
    bigomega = table.bigomega if (table is not None and cfg.almost_r) else np.zeros(1, np.uint8)
    cap = 256
    st = np.zeros((cap, A + 1), dtype=np.int64)
    sd = np.zeros(cap, dtype=np.int64)
    nviol = 0
    for node, dep in zip(tasks, depths):
        st[0, :A] = node
        st[0, A] = sum(int(isprime[abs(int(x))]) for x in node) if cfg.primes else 0
        sd[0] = dep
        sp = 1
        while sp > 0:
            sp, nv = kern(st, sd, sp, acc.bound, acc.thr, acc.counts, acc.hist, acc.depth,
                          acc.pk, acc.newp, isprime, acc.apk, bigomega)
            nviol += nv
            if sp > 0:
                st = np.concatenate([st, np.zeros_like(st)])
                sd = np.concatenate([sd, np.zeros_like(sd)])
    return acc.arrays(), nviol


_POOL_STATE: dict = {}


def _pool_worker(chunk):
    cfg, table = _POOL_STATE["cfg"], _POOL_STATE["table"]
    idx, tasks, depths = chunk
    arrs, nviol = _run_tasks(cfg, table, tasks, depths)
    return idx, arrs, nviol


def _state_payload(cfg, task_digest, done, acc) -> dict:
    return {
        "fingerprint": cfg.fingerprint(),
        "task_digest": task_digest,
        "done": sorted(int(i) for i in done),
        "arrays": [a.tolist() for a in acc.arrays()],
        "nviol": acc.nviol,
    }


def _save_state(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload))
    os.replace(tmp, path)


def _tree_census(cfg: EnumerationConfig, state_path=None, stop_after: int | None = None) -> OrbitCensus:
    t0 = time.perf_counter()
    engine = cfg.resolved_engine()
    lay = _Layout(cfg.root)
    table = _prime_table(cfg)
    acc = _Accumulator(cfg, table)
    census_args = dict(fingerprint=cfg.fingerprint(), engine=engine, root=cfg.root, norm=cfg.norm,
                       checkpoints=cfg.checkpoints)
    if cfg.memory_cap is not None:
        need = sum(a.nbytes for a in acc.arrays()) + (table.isprime.nbytes * 2 if table else 0)
        if need > cfg.memory_cap:
            raise MemoryCapExceeded(
                f"tree engine needs about {need} bytes, cap is {cfg.memory_cap}",
                _finish(cfg, acc, census_args, t0, partial=True),
            )
    if not acc.within(cfg.root):
        return _finish(cfg, acc, census_args, t0)
    acc.record(cfg.root, 1, 0, None)
    limit = None if engine == "python" else TASK_TARGET
    frontier = _python_tree(lay, acc, [(cfg.root, 0)], limit)
    if not frontier:
        return _finish(cfg, acc, census_args, t0)

    tasks = np.array([v for v, _ in frontier], dtype=np.int64)
    depths = np.array([d for _, d in frontier], dtype=np.int64)
    task_digest = hashlib.sha256(tasks.tobytes() + depths.tobytes()).hexdigest()[:16]
    base = acc
    done: set[int] = set()
    path = Path(state_path) if state_path else None
    if path is not None and path.exists():
        state = json.loads(path.read_text())
        if state.get("fingerprint") != cfg.fingerprint() or state.get("task_digest") != task_digest:
            raise ResumeMismatch(f"resume state {path} was written for a different configuration")
        done = set(state["done"])
        base = _Accumulator(cfg, table)
        base.add([np.asarray(a, dtype=np.int64).reshape(m.shape)
                  for a, m in zip(state["arrays"], base.arrays())], state["nviol"])

    todo = [i for i in range(len(tasks)) if i not in done]
    interrupted = False
    if stop_after is not None and stop_after < len(todo):
        todo = todo[:stop_after]
        interrupted = True

    nchunks = max(1, min(len(todo), cfg.workers * 4))
    chunks = [todo[k::nchunks] for k in range(nchunks)] if todo else []
    chunks = [sorted(c) for c in chunks if c]

    def absorb(idx, arrs, nviol):
        base.add(arrs, nviol)
        done.update(idx)
        if path is not None:
            _save_state(path, _state_payload(cfg, task_digest, done, base))

    # compile before forking so workers inherit the kernel
    get_kernel(lay.arity, lay.coef, lay.blocks, cfg.norm, cfg.primes, bool(cfg.almost_r))
    if cfg.workers == 1 or len(chunks) <= 1:
        for c in chunks:
            arrs, nviol = _run_tasks(cfg, table, tasks[c], depths[c])
            absorb(c, arrs, nviol)
    else:
        import multiprocessing as mp
        from concurrent.futures import ProcessPoolExecutor

        _POOL_STATE.update(cfg=cfg, table=table)
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
            for idx, arrs, nviol in pool.map(_pool_worker, [(c, tasks[c], depths[c]) for c in chunks]):
                absorb(idx, arrs, nviol)
        _POOL_STATE.clear()

    # a resumed run already holds the splitter's contribution in the saved arrays
    acc = base
    partial = interrupted or len(done) < len(tasks)
    if path is not None and not partial and path.exists():
        path.unlink()
    census = _finish(cfg, acc, census_args, t0, partial=partial)
    census.tasks_done, census.tasks_total = len(done), len(tasks)
    return census


def _finish(cfg, acc: _Accumulator, census_args: dict, t0: float, partial: bool = False) -> OrbitCensus:
    nb = len(acc.thr)
    counts = np.cumsum(acc.counts[:nb]).tolist()
    nz = np.nonzero(acc.hist)[0]
    hist = {int(k): int(acc.hist[k]) for k in nz}
    dz = np.nonzero(acc.depth)[0]
    depth = acc.depth[: dz[-1] + 1].tolist() if dz.size else []
    pc = npc = alm = None
    A = len(cfg.root)
    if cfg.primes:
        cum = np.cumsum(acc.pk[:nb], axis=0)
        # at least k prime coordinates
        tail = np.cumsum(cum[:, ::-1], axis=1)[:, ::-1]
        pc = tail[:, 1:].tolist()
        npc = np.cumsum(acc.newp[:nb]).tolist()
    if cfg.almost_r:
        alm = {}
        for r1 in range(cfg.almost_r):
            cum = np.cumsum(acc.apk[:nb, r1, :], axis=0)
            tail = np.cumsum(cum[:, ::-1], axis=1)[:, ::-1]
            alm[r1 + 1] = tail[:, 1 : A + 1].tolist()
    return OrbitCensus(
        counts=[int(c) for c in counts], new_curvatures=hist, depth_sizes=[int(d) for d in depth],
        prime_counts=pc, new_prime_counts=npc, almost_counts=alm, violations=int(acc.nviol),
        partial=partial, elapsed=time.perf_counter() - t0, peak_memory=_peak_rss(), **census_args,
    )


# ---------------------------------------------------------------------------
# breadth-first engine


def _rows_view(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    return a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()


def _unique_rows(a: np.ndarray) -> np.ndarray:
    if len(a) == 0:
        return a
    return np.unique(a, axis=0)


def _setdiff_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if len(a) == 0 or len(b) == 0:
        return a
    keep = ~np.isin(_rows_view(a), _rows_view(b))
    return a[keep]


def _row_norms(a: np.ndarray, norm: str) -> np.ndarray:
    return np.abs(a).max(axis=1) if norm == "max" else (a * a).sum(axis=1)


def _bfs_census(cfg: EnumerationConfig) -> OrbitCensus:
    t0 = time.perf_counter()
    A = len(cfg.root)
    coef = 2 // (A - 3)
    thr = cfg.thresholds()
    nb = len(thr)
    # exploration bound: norm < T * slack
    lim = cfg.T * cfg.slack
    explore = math.ceil(lim) if cfg.norm == "max" else math.ceil(lim * lim)
    if explore >= KERNEL_LIMIT:
        raise CurvatureOverflowError("bfs engine bound exceeds the 64-bit safe range")
    table = _prime_table(cfg)
    counts = np.zeros(nb + 1, dtype=np.int64)
    pk = np.zeros((nb + 1, A + 1), dtype=np.int64)
    newp = np.zeros(nb + 1, dtype=np.int64)
    apk = np.zeros((nb + 1, max(cfg.almost_r, 1), A + 1), dtype=np.int64)
    hist: Counter = Counter()
    frontier_sizes: list[int] = []
    root = np.array([cfg.root], dtype=np.int64)
    census_args = dict(fingerprint=cfg.fingerprint(), engine="bfs", root=cfg.root, norm=cfg.norm,
                       checkpoints=cfg.checkpoints)

    def tally(level: np.ndarray, is_root: bool) -> None:
        nr = _row_norms(level, cfg.norm)
        j = np.searchsorted(thr, nr, side="right")
        counts[:] += np.bincount(j, minlength=nb + 1)
        inside = j < nb
        top = level.max(axis=1)
        if not is_root:
            hist.update(np.abs(top[inside]).tolist())
        if table is not None:
            av = np.abs(level)
            if cfg.primes:
                kp = table.isprime[av].sum(axis=1)
                np.add.at(pk, (j, kp), 1)
                if not is_root:
                    np.add.at(newp, j, table.isprime[np.abs(top)].astype(np.int64))
            for r1 in range(cfg.almost_r):
                ka = ((table.bigomega[av] <= r1 + 1) & (av > 1)).sum(axis=1)
                np.add.at(apk, (j, r1, ka), 1)
        frontier_sizes.append(int(inside.sum()))

    def snapshot(partial: bool) -> OrbitCensus:
        acc_like = _Accumulator.__new__(_Accumulator)
        acc_like.thr, acc_like.counts, acc_like.pk, acc_like.newp, acc_like.apk = thr, counts, pk, newp, apk
        acc_like.hist = np.zeros(1, np.int64)
        acc_like.depth = np.zeros(0, np.int64)
        acc_like.nviol = 0
        c = _finish(cfg, acc_like, census_args, t0, partial=partial)
        c.new_curvatures = {int(k): int(v) for k, v in sorted(hist.items())}
        c.frontier_sizes = list(frontier_sizes)
        c.depth_sizes = []
        return c

    if _row_norms(root, cfg.norm)[0] >= explore:
        return snapshot(False)
    prev = np.zeros((0, A), dtype=np.int64)
    cur = root
    tally(cur, True)
    held = 0
    while len(cur):
        s = cur.sum(axis=1)
        kids = []
        for i in range(A):
            nxt = cur.copy()
            nxt[:, i] = coef * (s - cur[:, i]) - cur[:, i]
            kids.append(nxt)
        nxt = np.concatenate(kids)
        nxt = nxt[_row_norms(nxt, cfg.norm) < explore]
        nxt = _unique_rows(nxt)
        nxt = _setdiff_rows(nxt, cur)
        nxt = _setdiff_rows(nxt, prev)
        held = (len(prev) + len(cur) + len(nxt)) * A * 8 * 3
        if cfg.memory_cap is not None and held > cfg.memory_cap:
            raise MemoryCapExceeded(
                f"bfs levels need about {held} bytes, cap is {cfg.memory_cap}", snapshot(True)
            )
        if len(nxt):
            tally(nxt, False)
        prev, cur = cur, nxt
    while frontier_sizes and frontier_sizes[-1] == 0:
        frontier_sizes.pop()
    return snapshot(False)


# ---------------------------------------------------------------------------
# public API


def enumerate_orbit(config: EnumerationConfig, state_path=None, stop_after: int | None = None,
                    sink=None) -> OrbitCensus:
    """Census of ``{v in root * A : ||v|| < T_j}`` for every checkpoint.

    ``state_path`` enables checkpoint/resume for the tree engine;
    ``stop_after`` processes only that many subtree tasks and returns a
    partial census (used to exercise resume).  ``sink`` is a path that
    receives the sorted vector stream.
    """
    engine = config.resolved_engine()
    if engine == "bfs":
        census = _bfs_census(config)
    else:
        census = _tree_census(config, state_path, stop_after)
    if sink is not None:
        write_stream(sink, sorted_orbit(config.root, config.T, config.norm))
    return census


def count_vectors(config: EnumerationConfig) -> int:
    return enumerate_orbit(config).total


@dataclass
class ExponentFit:
    delta: float
    intercept: float
    windows: list[tuple[float, float, float]]

    @property
    def window_slopes(self) -> list[float]:
        return [w[2] for w in self.windows]


def fit_exponent(census: OrbitCensus | Sequence[tuple[float, int]], dyadic_only: bool = False) -> ExponentFit:
    """Least-squares slope of ``log N`` against ``log T`` plus consecutive-window slopes."""
    if isinstance(census, OrbitCensus):
        pts = list(zip(census.checkpoints, census.counts))
        if dyadic_only:
            T = census.checkpoints[-1]
            pts = [(c, n) for c, n in pts if (T / c).denominator == 1 and _is_pow2((T / c).numerator)]
    else:
        pts = list(census)
    pts = [(float(t), int(n)) for t, n in pts if n > 0]
    if len(pts) < 3:
        raise ValueError("need at least 3 checkpoints with positive counts")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, icpt = np.polyfit(x, y, 1)
    wins = []
    for (t1, n1), (t2, n2) in zip(pts, pts[1:]):
        wins.append((t1, t2, math.log(n2 / n1) / math.log(t2 / t1)))
    return ExponentFit(float(slope), float(icpt), wins)


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass
class ConnectivityReport:
    root: tuple[int, ...]
    T: int
    slack1: int
    slack3: int
    tree: int
    only_via_large: list[tuple[int, ...]]

    @property
    def consistent(self) -> bool:
        return self.slack1 == self.slack3 == self.tree and not self.only_via_large


def validate_connectivity(root: Sequence[int], T_small: int, norm: str = "max") -> ConnectivityReport:
    """Compare BFS with slack 1 and 3 against the tree engine on a small ball."""
    if T_small > 1000:
        raise ValueError("validate_connectivity is meant for T <= 1000")
    root = tuple(root)
    c1 = EnumerationConfig(root, T_small, norm=norm, engine="bfs")
    c3 = EnumerationConfig(root, T_small, norm=norm, engine="bfs", slack=3)
    n1 = _bfs_census(c1).total
    n3 = _bfs_census(c3).total
    nt = _tree_census(EnumerationConfig(root, T_small, norm=norm, engine="tree")).total
    extra: list[tuple[int, ...]] = []
    if n3 != n1:
        a = _bfs_vectors(root, T_small, 1, norm)
        b = _bfs_vectors(root, T_small, 3, norm)
        extra = sorted(b - a)
    return ConnectivityReport(root, T_small, n1, n3, nt, extra)


def _bfs_vectors(root, T, slack, norm) -> set[tuple[int, ...]]:
    """Set-based BFS returning the vectors with norm < T (small T only)."""
    A = len(root)
    coef = 2 // (A - 3)
    lim = T * slack if norm == "max" else (T * slack) ** 2
    lim_t = T if norm == "max" else T * T
    seen = {tuple(root)}
    todo = [tuple(root)]
    while todo:
        u = todo.pop()
        s = sum(u)
        for i, x in enumerate(u):
            v = u[:i] + (coef * (s - x) - x,) + u[i + 1:]
            if v not in seen and norm_value(v, norm) < lim:
                seen.add(v)
                todo.append(v)
    return {v for v in seen if norm_value(v, norm) < lim_t}
