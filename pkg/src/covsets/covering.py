"""Covering-set realizations at finite depth and their hit counters.

A trace holds, for each scale block ``k``, the balls ``I_n = B(xi_n, l_n)``
with ``n`` in the sparse block, the level-k cubes they contain (containment
hits, ``Z``-type) and the level-k cubes they meet (intersection hits,
``X_Q``-type). The two notions are never merged.

Geometry is in integer units of ``base**-L`` with ``L = K + 2``: orbit points
are truncated to ``L`` digits and radii rounded down to that grid.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateTargetError
from .process import OrbitSource
from .sequences import BlockTable
from .space import DigitSpace

TRACE_SCHEMA = "cover-trace v1"


@dataclass(frozen=True)
class TargetSet:
    """Digit-restriction target: level ``k`` digits range over ``D_k``.

    With ``cyclic=True`` the level alphabets repeat with period
    ``len(digit_sets)``; otherwise the last alphabet repeats forever.
    """

    base: int
    digit_sets: tuple
    cyclic: bool = True

    def __post_init__(self):
        sets = tuple(tuple(sorted(set(int(d) for d in ds))) for ds in self.digit_sets)
        if not sets:
            raise ValueError("target needs at least one level alphabet")
        for ds in sets:
            if not ds:
                raise DegenerateTargetError("empty level alphabet makes the target empty")
            if ds[0] < 0 or ds[-1] >= self.base:
                raise ValueError(f"target digits must lie in 0..{self.base - 1}")
        object.__setattr__(self, "digit_sets", sets)

    @classmethod
    def from_alphabet(cls, base, alphabet):
        return cls(base, (tuple(alphabet),))

    @classmethod
    def whole(cls, space: DigitSpace):
        return cls(space.base, (space.alphabet,))

    @classmethod
    def cantor(cls):
        return cls(3, ((0, 2),))

    @classmethod
    def moran(cls, base, pattern):
        """Level-varying target whose alphabets cycle through ``pattern``."""
        return cls(base, tuple(tuple(p) for p in pattern), cyclic=True)

    @classmethod
    def point(cls, base, digits, tail_digit=0):
        """The single point with the given leading digits followed by ``tail_digit`` forever."""
        return cls(base, tuple((d,) for d in digits) + ((tail_digit,),), cyclic=False)

    def alphabet(self, k: int) -> tuple:
        if k < 1:
            raise ValueError("levels start at 1")
        if self.cyclic:
            return self.digit_sets[(k - 1) % len(self.digit_sets)]
        return self.digit_sets[min(k, len(self.digit_sets)) - 1]

    def masks(self, level: int) -> list:
        return [0] + [sum(1 << d for d in self.alphabet(j)) for j in range(1, level + 1)]

    def _deeper(self, level: int):
        if self.cyclic:
            return self.digit_sets
        return self.digit_sets[min(level, len(self.digit_sets) - 1):]

    def tail_hi(self, level: int) -> bool:
        """Some G-point sits on the right end of a level cube (digits ``m-1`` forever)."""
        return all(self.base - 1 in ds for ds in self._deeper(level))

    def tail_lo(self, level: int) -> bool:
        """Some G-point sits on the left end of a level cube (digits ``0`` forever)."""
        return all(0 in ds for ds in self._deeper(level))

    def count(self, k: int) -> int:
        """Number of level-k cylinders of G."""
        return math.prod(len(self.alphabet(j)) for j in range(1, k + 1))

    def cube_ids(self, k: int) -> np.ndarray:
        """Sorted ids of the level-k cylinders of G."""
        ids = np.zeros(1, dtype=np.int64)
        for j in range(1, k + 1):
            ds = np.asarray(self.alphabet(j), dtype=np.int64)
            ids = (ids[:, None] * self.base + ds[None, :]).ravel()
        return ids

    def meets(self, level: int, ids) -> np.ndarray:
        """Closed level cubes ``ids`` that meet G (boundary contacts included)."""
        ids = np.asarray(ids, dtype=np.int64)
        masks = self.masks(level)
        hit = kernels.prefix_filter(ids, level, self.base, masks)
        n_cells = self.base**level
        if self.tail_hi(level):
            prev = ids - 1
            ok = prev >= 0
            hit[ok] |= kernels.prefix_filter(prev[ok], level, self.base, masks)
        if self.tail_lo(level):
            nxt = ids + 1
            ok = nxt < n_cells
            hit[ok] |= kernels.prefix_filter(nxt[ok], level, self.base, masks)
        return hit

    def interior(self, level: int, ids) -> np.ndarray:
        """Level cubes ``ids`` that are cylinders of G."""
        return kernels.prefix_filter(np.asarray(ids, dtype=np.int64), level, self.base,
                                     self.masks(level))

    def dims(self, depth: int = 24) -> tuple:
        """``(dim_H, dim_P)`` proxies: min and max of the Cesaro exponent over levels ``depth/2..depth``."""
        acc, ratios = 0.0, []
        for k in range(1, depth + 1):
            acc += math.log(len(self.alphabet(k)))
            if 2 * k >= depth:
                ratios.append(acc / (k * math.log(self.base)))
        return min(ratios), max(ratios)

    def check_inside(self, space: DigitSpace, depth: int) -> None:
        if space.base != self.base:
            raise ValueError("target and space use different bases")
        for k in range(1, depth + 1):
            if not set(self.alphabet(k)) <= set(space.alphabet):
                raise ValueError(f"target level {k} uses digits outside the space alphabet")

    def to_config(self) -> dict:
        return {"base": self.base, "levels": [list(ds) for ds in self.digit_sets],
                "cyclic": self.cyclic}


@dataclass
class BlockRecord:
    k: int
    n_k: int
    m_k: int
    indices: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    contained: np.ndarray
    touched: np.ndarray
    max_cubes: int = 0
    full_touched: np.ndarray | None = None


@dataclass
class CoverTrace:
    space: DigitSpace
    K: int
    depth: int
    seed: int
    trial: int
    c: float
    blocks: dict = field(default_factory=dict)
    locality_bound: float = float("inf")

    @property
    def scale(self) -> int:
        return self.space.base**self.depth

    def contained(self, k):
        return self.blocks[k].contained

    def touched(self, k):
        return self.blocks[k].touched

    def s_count(self, G: TargetSet, k: int) -> int:
        """``S_k``: intersection-hit cubes of block k that meet G."""
        return int(G.meets(k, self.blocks[k].touched).sum())


def simulate_cover(space: DigitSpace, table: BlockTable, src: OrbitSource, K: int,
                   full_blocks: bool = True, backend=None) -> CoverTrace:
    """Realize the balls of every sparse block up to ``K`` and classify level-k cubes.

    With ``full_blocks`` the intersection hits of every index of each block
    are also recorded, as used by :func:`limsup_cube_counts`.
    """
    if table.c is None:
        raise ValueError("table has no sparse selection; call sparse_indices first")
    if table.seq is None:
        raise ValueError("table does not carry its radius sequence")
    if K > table.K:
        raise ValueError(f"table materialized to block {table.K} < K = {K}")
    depth = K + 2
    space.check_depth(depth)
    scale = space.base**depth
    a0 = space.base**2
    trace = CoverTrace(space, K, depth, src.seed, src.trial, table.c,
                       locality_bound=space.ball_count_bound(a0))
    x_masks = space.x_masks(K)
    for k in range(1, K + 1):
        n_k = table.n(k)
        sparse = np.arange(table.sparse(k).start, table.sparse(k).stop, table.gap(k),
                           dtype=np.int64) if n_k else np.empty(0, dtype=np.int64)
        centers, radii = _balls(table, src, sparse, depth, scale)
        contained, touched, max_cubes = kernels.block_cover(
            centers, radii, k, scale, space.base, x_masks[:k + 1], backend=backend)
        rec = BlockRecord(k, n_k, len(sparse), sparse, centers, radii,
                          np.asarray(contained, dtype=np.int64),
                          np.asarray(touched, dtype=np.int64), max_cubes)
        if full_blocks and n_k:
            full = np.asarray(table.block_indices(k), dtype=np.int64)
            fc, fr = _balls(table, src, full, depth, scale)
            _, ft, fmax = kernels.block_cover(fc, fr, k, scale, space.base,
                                              x_masks[:k + 1], backend=backend)
            rec.full_touched = np.asarray(ft, dtype=np.int64)
            rec.max_cubes = max(rec.max_cubes, fmax)
        elif full_blocks:
            rec.full_touched = np.empty(0, dtype=np.int64)
        trace.blocks[k] = rec
    return trace


def _balls(table, src, ns, depth, scale):
    if len(ns) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    centers = src.numerators(ns, depth)
    # radii beyond the diameter are clamped: a radius of one unit interval covers X
    radii = np.minimum(np.array(table.seq.radius_units(ns, scale), dtype=object), scale)
    return centers, radii.astype(np.int64)


def hit_target(trace: CoverTrace, G: TargetSet, k_min: int, K: int) -> bool:
    """Containment hit in every non-empty block of ``[k_min, K]``.

    Block ``k`` counts as hit when some sparse ball contains a level-k cube
    that meets G; a finite-depth surrogate for G meeting the limsup set.
    """
    if k_min < 3:
        raise ValueError("k_min must be >= 3")
    if K > trace.K:
        raise ValueError("K beyond the simulated depth")
    for k in range(k_min, K + 1):
        rec = trace.blocks[k]
        if rec.m_k == 0:
            continue
        if rec.contained.size == 0 or not G.meets(k, rec.contained).any():
            return False
    return True


def limsup_cube_counts(trace: CoverTrace, G: TargetSet, m0: int,
                       mode: str = "scale") -> np.ndarray:
    """Level-k cubes meeting G that are hit by balls from blocks ``>= m0``.

    Returns an array ``counts`` with ``counts[k]`` for ``k = 0..K``.

    ``mode="scale"`` (default) pairs each level with its own block: row ``k``
    counts cubes hit by the balls of block ``k`` (every index of the block),
    and is zero for ``k < m0``. These are the cubes used to cover the limsup
    set at scale ``m**-k``, so their growth rate estimates its dimension.
    ``mode="union"`` counts, at every level, cubes hit by any sparse ball of
    blocks ``m0..K``; at finite depth this union is dense in G and grows like G.
    """
    if m0 < 1:
        raise ValueError("m0 must be >= 1")
    K = trace.K
    counts = np.zeros(K + 1, dtype=np.int64)
    if m0 > K:
        return counts
    if mode == "scale":
        for k in range(m0, K + 1):
            rec = trace.blocks[k]
            if rec.full_touched is None:
                raise ValueError("trace was simulated without full blocks")
            counts[k] = int(G.meets(k, rec.full_touched).sum())
        return counts
    if mode != "union":
        raise ValueError(f"unknown mode {mode!r}")
    centers, radii = [], []
    for j in range(m0, K + 1):
        rec = trace.blocks[j]
        centers.append(rec.centers)
        radii.append(rec.radii)
    centers = np.concatenate(centers)
    radii = np.concatenate(radii)
    x_masks = trace.space.x_masks(K)
    for k in range(1, K + 1):
        _, touched, _ = kernels.block_cover(centers, radii, k, trace.scale, trace.space.base,
                                            x_masks[:k + 1])
        counts[k] = int(G.meets(k, touched).sum()) if len(touched) else 0
    return counts


def trace_rows(trace: CoverTrace, G: TargetSet, hit: bool):
    for k in range(1, trace.K + 1):
        rec = trace.blocks[k]
        yield (trace.trial, k, rec.n_k, rec.m_k, len(rec.contained), len(rec.touched),
               trace.s_count(G, k), int(hit))


def trace_csv(traces_and_hits, G: TargetSet) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {TRACE_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "k", "n_k", "m_k", "h_contained", "h_intersect", "s_k", "hit_flag"])
    for trace, hit in traces_and_hits:
        w.writerows(trace_rows(trace, G, hit))
    return buf.getvalue()
