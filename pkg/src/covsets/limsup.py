"""Discrete limsup random fractals and Mandelbrot fractal percolation.

Every Bernoulli draw is a deterministic function of ``(stream, level, key)``
through a splitmix64 hash, so a cube's fate does not depend on which other
cubes were sampled. This is what lets pruned sampling (only cubes near the
target) and full-level sampling be compared draw for draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .covering import TargetSet
from .errors import (DegenerateTargetError, InsufficientDataError, ResourceError,
                     UnsupportedModelError)
from .estimator import HitEstimate, box_dimension, hit_probability
from .space import DigitSpace

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_FULL_LEVEL_CAP = 2**22


def splitmix64(x) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(*parts: int) -> int:
    """Fold integers into one 64-bit stream key."""
    h = np.zeros(1, dtype=np.uint64)
    for p in parts:
        h = splitmix64(h ^ np.uint64(int(p) & 0xFFFFFFFFFFFFFFFF))
    return int(h[0])


def uniforms(stream: int, level: int, keys) -> np.ndarray:
    """Uniform ``[0, 1)`` variates attached to ``(stream, level, key)``."""
    base = splitmix64(np.array([stream ^ (level * 0x2545F4914F6CDD1D & 0xFFFFFFFFFFFFFFFF)],
                               dtype=np.uint64))
    z = splitmix64(np.asarray(keys, dtype=np.int64).astype(np.uint64) ^ base)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def level_ids(space: DigitSpace, n: int) -> np.ndarray:
    """Sorted ids of all level-n cubes of X."""
    if len(space.alphabet) ** n > _FULL_LEVEL_CAP:
        raise ResourceError(f"level {n} has more than {_FULL_LEVEL_CAP} cubes")
    ids = np.zeros(1, dtype=np.int64)
    digits = np.asarray(space.alphabet, dtype=np.int64)
    for _ in range(n):
        ids = (ids[:, None] * space.base + digits[None, :]).ravel()
    return ids


@dataclass(frozen=True)
class LimsupModel:
    """Independent (or sibling-coupled) retention ``Z_n(Q)`` with ``P_n(Q) = m**(-n gamma(Q))``.

    ``gamma1 >= gamma2``: the rarest cubes are retained with probability
    ``m**(-n gamma1)``, the likeliest with ``m**(-n gamma2)``.
    ``field="constant"`` uses one exponent everywhere. ``field="two-level"``
    assigns ``gamma1`` to cubes whose last digit is the smallest alphabet
    digit and ``gamma2`` to the rest, so both exponents occur at every level.
    ``dependence="sibling"`` shares one uniform among the children of a
    parent, a toy model with positive correlation length.
    """

    space: DigitSpace
    depth: int
    gamma1: float
    gamma2: float | None = None
    field: str = "constant"
    dependence: str = "independent"
    doubled: bool = False

    def __post_init__(self):
        if self.field not in ("constant", "two-level"):
            raise ValueError(f"unknown probability field {self.field!r}")
        if self.dependence not in ("independent", "sibling"):
            raise UnsupportedModelError(f"unsupported dependence {self.dependence!r}")
        if self.gamma2 is None:
            object.__setattr__(self, "gamma2", self.gamma1)
        if self.field == "constant" and self.gamma2 != self.gamma1:
            raise ValueError("a constant field has gamma1 == gamma2")
        if min(self.gamma1, self.gamma2) < 0:
            raise ValueError("exponents must be non-negative")
        if self.gamma1 < self.gamma2:
            raise ValueError("gamma1 is the largest exponent: need gamma1 >= gamma2")
        self.space.check_depth(self.depth)

    def gamma(self, n: int, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if self.field == "constant":
            return np.full(ids.shape, float(self.gamma1))
        low = (ids % self.space.base) == self.space.alphabet[0]
        return np.where(low, float(self.gamma1), float(self.gamma2))

    def prob(self, n: int, ids) -> np.ndarray:
        return float(self.space.base) ** (-n * self.gamma(n, ids))

    def exponent_range(self, n: int) -> tuple:
        """``(gamma1, gamma2)`` measured as ``(max, min)`` over level-n cubes of ``log_m(1/P_n(Q)) / n``."""
        ids = np.asarray(self.space.alphabet, dtype=np.int64)
        e = -np.log(self.prob(n, ids)) / (n * math.log(self.space.base))
        return float(e.max()), float(e.min())

    def _keys(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        return ids // self.space.base if self.dependence == "sibling" else ids

    def retained(self, stream: int, n: int, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        return uniforms(stream, n, self._keys(ids)) < self.prob(n, ids)


def _target_level_ids(space, G, n, doubled):
    ids = G.cube_ids(n)
    ids = ids[_inside_x(space, n, ids)]
    if doubled:
        ids = np.unique(np.concatenate([ids - 1, ids, ids + 1]))
        ids = ids[(ids >= 0) & (ids < space.base**n)]
        ids = ids[_inside_x(space, n, ids)]
    return ids


def _inside_x(space, n, ids):
    return kernels.prefix_filter(ids, n, space.base, space.x_masks(n))


def limsup_trial_hit(model: LimsupModel, G: TargetSet, stream: int, window: int = 1,
                     pruned: bool = True) -> bool:
    """Retained level-n cube meeting G for every ``n`` in the tail window.

    Pruned sampling draws only the target's cylinders (and their neighbours
    when ``model.doubled``); full sampling draws every level-n cube of X and
    then restricts, consuming identical variates for the shared cubes.
    """
    N = model.depth
    for n in range(N - window + 1, N + 1):
        if pruned:
            ids = _target_level_ids(model.space, G, n, model.doubled)
        else:
            ids = level_ids(model.space, n)
            keep = G.interior(n, ids)
            if model.doubled:
                near = np.concatenate([ids[keep] + d for d in (-1, 0, 1)])
                keep = np.isin(ids, near)
            ids = ids[keep]
        if ids.size == 0 or not model.retained(stream, n, ids).any():
            return False
    return True


@dataclass
class LimsupHits:
    estimate: HitEstimate
    flags: list
    expected_hits: float

    def to_dict(self) -> dict:
        return {**self.estimate.to_dict(), "expected_hits_last_level": self.expected_hits}


def sample_limsup_hits(model: LimsupModel, G: TargetSet, trials: int, seed: int = 0,
                       window: int = 1, pruned: bool = True) -> LimsupHits:
    if trials < 100:
        raise ValueError("need at least 100 trials")
    N = model.depth
    ids = _target_level_ids(model.space, G, N, model.doubled)
    if ids.size == 0:
        raise DegenerateTargetError(f"target has no cube inside X at depth {N}")
    flags = [limsup_trial_hit(model, G, stream_key(seed, t), window, pruned)
             for t in range(trials)]
    expected = float(model.prob(N, ids).sum())
    return LimsupHits(hit_probability(flags), flags, expected)


def limsup_level_counts(model: LimsupModel, stream: int) -> np.ndarray:
    """``counts[n]`` = number of retained level-n cubes of X, ``n = 0..depth``."""
    counts = np.zeros(model.depth + 1, dtype=np.int64)
    for n in range(1, model.depth + 1):
        ids = level_ids(model.space, n)
        counts[n] = int(model.retained(stream, n, ids).sum())
    return counts


def correlation_profile(model: LimsupModel, eps: float, n: int) -> int:
    """``f(n, eps)``: max over Q of ``#{Q' : Cov(Z(Q), Z(Q')) >= eps P(Q) P(Q')}``.

    Every draw is ``Z(Q) = 1{U_key(Q) < P(Q)}``; two cubes sharing a key have
    covariance ``min(P, P') - P P'``, cubes with distinct keys are independent.
    Q itself is always counted.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if model.dependence == "independent":
        return 1
    if model.dependence != "sibling":
        raise UnsupportedModelError(model.dependence)
    # the field depends on the last digit only, so every sibling group looks alike
    p = model.prob(n, np.asarray(model.space.alphabet, dtype=np.int64))
    cov = np.minimum.outer(p, p) - np.outer(p, p)
    hits = cov >= eps * np.outer(p, p)
    np.fill_diagonal(hits, True)
    return int(hits.sum(axis=1).max())


# -- fractal percolation ---------------------------------------------------

def retention_from_level(t: float, base: int = 2, convention: str = "bits") -> float:
    """Retention probability for percolation level ``t``.

    ``"bits"`` is ``p = 2**-t`` (dimension threshold ``t`` on the binary tree);
    ``"base"`` is ``p = base**-t``, the threshold-``t`` choice on an m-ary tree.
    """
    if convention == "bits":
        return 2.0**-t
    if convention == "base":
        return float(base) ** -t
    raise ValueError(f"unknown convention {convention!r}")


@dataclass
class PercolationRun:
    space: DigitSpace
    p: float
    depth: int
    G: TargetSet | None = None
    seed: int = 0
    trial: int = 0
    copy: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("retention must lie in (0, 1]")
        self.space.check_depth(self.depth)

    @property
    def stream(self) -> int:
        return stream_key(self.seed, self.trial, self.copy, 0x9E3)


@dataclass
class PercolationResult:
    counts: list
    survivors: np.ndarray
    hit: bool | None
    pruned: bool = False


def percolation_sample(run: PercolationRun, pruned: bool = True) -> PercolationResult:
    """Top-down Bernoulli pruning of the cube tree.

    With a target and ``pruned`` set, cubes whose closed interval misses G are
    dropped as well (their descendants cannot meet G), and ``counts`` are the
    G-meeting survivors per level.
    """
    space = run.space
    digits = np.asarray(space.alphabet, dtype=np.int64)
    ids = np.zeros(1, dtype=np.int64)
    counts = [1]
    restrict = run.G is not None and pruned
    for n in range(1, run.depth + 1):
        ids = (ids[:, None] * space.base + digits[None, :]).ravel()
        if restrict:
            ids = ids[run.G.meets(n, ids)]
        if ids.size:
            ids = ids[uniforms(run.stream, n, ids) < run.p]
        counts.append(int(ids.size))
        if ids.size > _FULL_LEVEL_CAP:
            raise ResourceError("percolation survivors exceed the level cap")
    hit = None
    if run.G is not None:
        hit = bool(ids.size) if restrict else bool(run.G.meets(run.depth, ids).any())
    return PercolationResult(counts, ids, hit, restrict)


@dataclass
class UnionHits:
    estimate: HitEstimate
    single_copy: HitEstimate
    copies: int
    p: float

    @property
    def predicted(self) -> float:
        """``1 - (1 - q)**copies`` from the single-copy frequency ``q``."""
        return 1 - (1 - self.single_copy.p_hat) ** self.copies

    @property
    def residual(self) -> float:
        """Probability that all copies miss, under the single-copy estimate."""
        return (1 - self.single_copy.p_hat) ** self.copies

    def to_dict(self) -> dict:
        return {**self.estimate.to_dict(), "single_copy": self.single_copy.to_dict(),
                "copies": self.copies, "p": self.p, "predicted": self.predicted,
                "residual": self.residual}


def percolation_union_hits(t: float, copies: int, depth: int, G: TargetSet, trials: int,
                           space: DigitSpace | None = None, seed: int = 0,
                           convention: str = "bits") -> UnionHits:
    """Frequency with which the union of ``copies`` independent percolation sets meets G."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    space = space or DigitSpace.full(G.base)
    p = retention_from_level(t, space.base, convention)
    flags, first = [], []
    for trial in range(trials):
        hit = False
        for c in range(copies):
            h = percolation_sample(PercolationRun(space, p, depth, G, seed, trial, c)).hit
            if c == 0:
                first.append(h)
            if h:
                hit = True
                break
        flags.append(hit)
    return UnionHits(hit_probability(flags), hit_probability(first), copies, p)


@dataclass
class SlopeWitness:
    """Largest observed box-count slope of ``G n Gamma`` among surviving trials."""

    max_slope: float
    slopes: list = field(default_factory=list)
    survived: int = 0


def percolation_slope_witness(space: DigitSpace, p: float, depth: int, G: TargetSet,
                              trials: int, seed: int = 0) -> SlopeWitness:
    """Lower witness for the essential supremum of ``dim_H(G n Gamma)``.

    The maximum over finitely many trials is only a lower estimate of an
    essential supremum, and is reported as such.
    """
    slopes = []
    for trial in range(trials):
        res = percolation_sample(PercolationRun(space, p, depth, G, seed, trial))
        if res.hit:
            try:
                slopes.append(box_dimension(res.counts, space.base).slope)
            except InsufficientDataError:
                continue
    return SlopeWitness(max(slopes) if slopes else float("nan"), slopes, len(slopes))
