"""Exact geometry of base-m digit spaces.

A :class:`DigitSpace` is the set of points ``sum d_i m**-i`` whose digits all
lie in a restricted alphabet ``D``; with the uniform Bernoulli measure it is
Ahlfors ``s``-regular with ``s = log|D| / log m``. Cubes are m-adic cylinders
taken as closed intervals ``[v, v + m**-k]``; every set predicate here is
evaluated in exact rational (or scaled-integer) arithmetic.
"""
from __future__ import annotations

import bisect
import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import kernels
from .errors import ResourceError

# denominator budget: m**cap stays well inside int64 for the compiled kernels
_DEFAULT_CAPS = {2: 24, 3: 16}
_CAP_BITS = 26

R_IN = Fraction(1, 2)
R_OUT = Fraction(1)


def default_depth_cap(base: int) -> int:
    if base in _DEFAULT_CAPS:
        return _DEFAULT_CAPS[base]
    cap = 1
    while base ** (cap + 1) <= 2**_CAP_BITS:
        cap += 1
    return cap


@dataclass(frozen=True)
class DigitSpace:
    """Compact space of base-``base`` digit sequences over ``alphabet``."""

    base: int
    alphabet: tuple
    depth_cap: int = 0

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        alphabet = tuple(sorted(set(int(d) for d in self.alphabet)))
        if len(alphabet) < 2:
            raise ValueError("alphabet needs at least two digits")
        if alphabet[0] < 0 or alphabet[-1] >= self.base:
            raise ValueError(f"digits must lie in 0..{self.base - 1}")
        object.__setattr__(self, "alphabet", alphabet)
        if not self.depth_cap:
            object.__setattr__(self, "depth_cap", default_depth_cap(self.base))
        if self.depth_cap < 1:
            raise ValueError("depth_cap must be positive")

    @classmethod
    def full(cls, base, depth_cap=0):
        return cls(base, tuple(range(base)), depth_cap)

    @classmethod
    def cantor(cls, depth_cap=0):
        """Middle-third Cantor set."""
        return cls(3, (0, 2), depth_cap)

    @property
    def dim_s(self) -> float:
        return math.log(len(self.alphabet)) / math.log(self.base)

    @property
    def scale_b(self) -> Fraction:
        return Fraction(1, self.base)

    @property
    def c1(self) -> int:
        """Ahlfors constant: ``r**s / c1 <= mu(B(x, r)) <= c1 * r**s`` for x in X, r <= 1.

        Lower side: the level-(j+1) cube of x sits inside B(x, r) once
        ``r > m**-(j+1)``, giving mass ``>= r**s / |D|``. Upper side: a ball with
        ``r <= m**-j`` meets the interiors of at most three level-j cubes.
        """
        return 3 * len(self.alphabet)

    @property
    def full_alphabet(self) -> bool:
        return len(self.alphabet) == self.base

    @property
    def digit_mask(self) -> int:
        return sum(1 << d for d in self.alphabet)

    def x_masks(self, level: int) -> list:
        return [0] + [self.digit_mask] * level

    def hull(self) -> tuple:
        """Convex hull ``[min X, max X]``."""
        lo = Fraction(self.alphabet[0], self.base - 1)
        hi = Fraction(self.alphabet[-1], self.base - 1)
        return lo, hi

    def check_depth(self, k: int) -> None:
        if k < 0:
            raise ValueError("depth must be non-negative")
        if k > self.depth_cap:
            raise ResourceError(f"depth {k} exceeds cap {self.depth_cap} for base {self.base}")

    def ball_count_bound(self, a0) -> float:
        """Upper bound on level-k cubes meeting a ball of radius ``a0 * m**-k``."""
        s = self.dim_s
        return self.c1 ** 2 * (2 * float(R_OUT) + float(a0)) ** s / float(R_IN) ** s

    def count_bounds(self, k: int) -> tuple:
        """Two-sided bracket on the number of level-k cubes."""
        s = self.dim_s
        grow = self.base ** (k * s)
        return (grow / (self.c1 * float(R_OUT) ** s), self.c1 * grow / float(R_IN) ** s)

    def to_config(self) -> dict:
        return {"base": self.base, "alphabet": list(self.alphabet), "depth_cap": self.depth_cap}

    @classmethod
    def from_config(cls, cfg: dict) -> "DigitSpace":
        base = int(cfg["base"])
        alphabet = cfg.get("alphabet", list(range(base)))
        return cls(base, tuple(alphabet), int(cfg.get("depth_cap", 0)))


def digits_value(digits: Iterable[int], base: int) -> Fraction:
    num = 0
    n = 0
    for d in digits:
        num = num * base + d
        n += 1
    return Fraction(num, base**n)


@dataclass(frozen=True)
class Point:
    digits: tuple
    base: int

    @property
    def depth(self) -> int:
        return len(self.digits)

    @property
    def value(self) -> Fraction:
        return digits_value(self.digits, self.base)


@dataclass(frozen=True)
class Cube:
    """Closed m-adic cylinder ``[v, v + m**-level]`` with ``v`` set by ``prefix``."""

    prefix: tuple
    base: int

    @property
    def level(self) -> int:
        return len(self.prefix)

    @property
    def index(self) -> int:
        """Positional id: the left endpoint in units of ``m**-level``."""
        p = 0
        for d in self.prefix:
            p = p * self.base + d
        return p

    @property
    def width(self) -> Fraction:
        return Fraction(1, self.base**self.level)

    @property
    def left(self) -> Fraction:
        return Fraction(self.index, self.base**self.level)

    @property
    def right(self) -> Fraction:
        return Fraction(self.index + 1, self.base**self.level)

    @property
    def midpoint(self) -> Fraction:
        return Fraction(2 * self.index + 1, 2 * self.base**self.level)

    @property
    def representative(self) -> Fraction:
        """Point anchoring the containing ball; the left endpoint."""
        return self.left

    def children(self, space: DigitSpace) -> list:
        return [Cube(self.prefix + (d,), self.base) for d in space.alphabet]

    def parent(self) -> "Cube":
        if not self.prefix:
            raise ValueError("the root cube has no parent")
        return Cube(self.prefix[:-1], self.base)

    @classmethod
    def from_index(cls, index: int, level: int, base: int) -> "Cube":
        digits = []
        for _ in range(level):
            digits.append(index % base)
            index //= base
        return cls(tuple(reversed(digits)), base)


@dataclass(frozen=True)
class Ball:
    """Closed ball ``[center - radius, center + radius]`` (intersected with X)."""

    center: Fraction
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "center", Fraction(self.center))
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def lo(self) -> Fraction:
        return self.center - self.radius

    @property
    def hi(self) -> Fraction:
        return self.center + self.radius


class Relation(enum.Enum):
    DISJOINT = "disjoint"
    INTERSECTS = "intersects"
    CONTAINS = "contains"

    @property
    def intersects(self) -> bool:
        return self is not Relation.DISJOINT


def cubes_at_level(space: DigitSpace, k: int) -> list:
    """All ``|D|**k`` level-k cubes in lexicographic prefix order."""
    space.check_depth(k)
    return [Cube(p, space.base) for p in itertools.product(space.alphabet, repeat=k)]


def ball_cube_relation(ball: Ball, cube: Cube) -> Relation:
    if cube.left > ball.hi or cube.right < ball.lo:
        return Relation.DISJOINT
    if cube.left >= ball.lo and cube.right <= ball.hi:
        return Relation.CONTAINS
    return Relation.INTERSECTS


def _ball_units(ball: Ball, base: int, k: int):
    """Scale so the ball and all level-k cube endpoints are integers."""
    den = math.lcm(ball.center.denominator, ball.radius.denominator, base**k)
    c = ball.center * den
    r = ball.radius * den
    return int(c), int(r), den


def count_cubes_meeting_ball(space: DigitSpace, k: int, ball: Ball, backend=None) -> int:
    """Number of level-k cubes whose closed interval meets the ball."""
    space.check_depth(k)
    c, r, scale = _ball_units(ball, space.base, k)
    _, touched, _ = kernels.block_cover([c], [r], k, scale, space.base,
                                        space.x_masks(k), backend=backend)
    return len(touched)


def cubes_meeting_ball(space: DigitSpace, k: int, ball: Ball, backend=None):
    """Ids of level-k cubes meeting / contained in the ball, as two sorted arrays."""
    space.check_depth(k)
    c, r, scale = _ball_units(ball, space.base, k)
    contained, touched, _ = kernels.block_cover([c], [r], k, scale, space.base,
                                                space.x_masks(k), backend=backend)
    return touched, contained


def ball_measure_bounds(space: DigitSpace, ball: Ball, level: int) -> tuple:
    """Lower/upper bounds on ``mu(ball)`` from level-``level`` cylinders.

    Lower bound counts cubes contained in the ball, upper bound cubes meeting it.
    """
    touched, contained = cubes_meeting_ball(space, level, ball)
    total = len(space.alphabet) ** level
    return Fraction(len(contained), total), Fraction(len(touched), total)


@dataclass
class NestingReport:
    passed: bool
    k_max: int
    r_in: Fraction = R_IN
    r_out: Fraction = R_OUT
    counts: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    c1: int = 0
    failure: dict | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "k_max": self.k_max,
            "r_in": str(self.r_in),
            "r_out": str(self.r_out),
            "counts": {str(k): v for k, v in self.counts.items()},
            "bounds": {str(k): list(v) for k, v in self.bounds.items()},
            "c1": self.c1,
            "failure": self.failure,
        }


def _fail(report, prop, level, prefix, detail):
    report.passed = False
    report.failure = {"property": prop, "level": level,
                      "prefix": list(prefix) if prefix is not None else None,
                      "detail": detail}
    return report


def nesting_family_report(space: DigitSpace, k_max: int,
                          family: dict | None = None) -> NestingReport:
    """Verify partition, nesting and inner/outer ball control of the cube family.

    ``family`` maps level -> sequence of cubes and defaults to the cylinder
    family of ``space``; pass a modified one to exercise the failure paths.
    Inner balls are centred at the cube midpoint with radius ``r_in * m**-k``;
    outer balls at the representative (left endpoint) with radius ``r_out * m**-k``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    space.check_depth(k_max)
    if family is None:
        family = {k: cubes_at_level(space, k) for k in range(k_max + 1)}
    report = NestingReport(passed=True, k_max=k_max, c1=space.c1)
    expected_root = Cube((), space.base)
    prev = None
    for k in range(k_max + 1):
        level = sorted(family.get(k, ()), key=lambda q: q.index)
        report.counts[k] = len(level)
        # (1) every prefix present once, interiors pairwise disjoint
        seen = set()
        for q in level:
            if q.level != k or any(d not in space.alphabet for d in q.prefix):
                return _fail(report, 1, k, q.prefix, "cube is not a level-k cylinder of X")
            if q.prefix in seen:
                return _fail(report, 1, k, q.prefix, "duplicate cube")
            seen.add(q.prefix)
        for a, b in zip(level, level[1:]):
            if b.left < a.right:
                return _fail(report, 1, k, b.prefix, "overlaps previous cube beyond an endpoint")
        if k == 0:
            if level != [expected_root]:
                return _fail(report, 1, 0, (), "level 0 must be the single root cube")
        elif len(level) != len(space.alphabet) ** k:
            missing = next(p for p in itertools.product(space.alphabet, repeat=k)
                           if p not in seen)
            return _fail(report, 1, k, missing, "X not covered: cube missing")
        # (2) each cube lies in exactly one cube of the previous level
        if prev is not None:
            lefts = [p.left for p in prev]
            for q in level:
                i = bisect.bisect_right(lefts, q.left)
                owners = [p for p in prev[max(0, i - 2):i + 1]
                          if p.left <= q.left and q.right <= p.right]
                if len(owners) != 1:
                    return _fail(report, 2, k, q.prefix,
                                 f"contained in {len(owners)} parent cubes")
        # (3) inner and outer balls
        w = Fraction(1, space.base**k)
        for q in level:
            mid, rep = q.midpoint, q.representative
            if not (mid - R_IN * w >= q.left and mid + R_IN * w <= q.right):
                return _fail(report, 3, k, q.prefix, "inner ball leaves the cube")
            if not (rep - R_OUT * w <= q.left and q.right <= rep + R_OUT * w):
                return _fail(report, 3, k, q.prefix, "cube leaves the outer ball")
        prev = level
    for k in range(1, k_max + 1):
        lo, hi = space.count_bounds(k)
        report.bounds[k] = (lo, hi)
        if not lo * (1 - 1e-12) <= report.counts[k] <= hi * (1 + 1e-12):
            return _fail(report, "count", k, None, "cube count outside the two-sided bound")
    return report


def cube_ids(cubes: Sequence[Cube]) -> list:
    return [q.index for q in cubes]
