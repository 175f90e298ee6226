"""Stationary digit processes: i.i.d.-digit shift orbits and a mixing diagnostic.

A mu-random point ``x`` is sampled digit by digit (uniform on the alphabet),
and the orbit under the base-m shift is read off by sliding a window along
the digit stream: ``xi_n = T**(n-1) x`` has digits ``x_n, x_{n+1}, ...``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamplesError
from .space import Cube, DigitSpace, Point

_CHUNK = 4096

PRESETS = ("base2", "base3-cantor", "base-m-full")


def preset_space(name: str, base: int | None = None) -> DigitSpace:
    if name == "base2":
        return DigitSpace.full(2)
    if name == "base3-cantor":
        return DigitSpace.cantor()
    if name == "base-m-full":
        if base is None:
            raise ValueError("preset base-m-full needs a base")
        return DigitSpace.full(base)
    raise ValueError(f"unknown system preset {name!r}; choose from {PRESETS}")


def trial_rng(seed: int, trial: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(master seed, trial, *stream)``."""
    return np.random.default_rng(np.random.SeedSequence([seed, trial, *stream]))


@dataclass
class OrbitSource:
    """Shift orbit of a mu-random point, with a memoized digit stream.

    The stream is extended in fixed-size chunks from one generator, so the
    digits never depend on the order or size of queries.
    """

    space: DigitSpace
    seed: int
    trial: int = 0
    _digits: np.ndarray = field(default=None, init=False, repr=False)
    _rng: np.random.Generator = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self._rng = trial_rng(self.seed, self.trial)
        self._digits = np.empty(0, dtype=np.int64)
        self._alphabet = np.asarray(self.space.alphabet, dtype=np.int64)

    @classmethod
    def from_digits(cls, space: DigitSpace, digits) -> "OrbitSource":
        """Source with a fixed, explicitly given seed stream (it cannot be extended)."""
        src = cls(space, seed=0)
        digits = np.asarray(digits, dtype=np.int64)
        if not np.isin(digits, src._alphabet).all():
            raise ValueError("seed digits outside the alphabet")
        src._digits = digits
        src._rng = None
        return src

    def digits(self, length: int) -> np.ndarray:
        """First ``length`` digits of the seed point ``x``."""
        while self._digits.size < length:
            if self._rng is None:
                raise IndexError(f"fixed digit stream has only {self._digits.size} digits")
            chunk = self._alphabet[self._rng.integers(0, self._alphabet.size, _CHUNK)]
            self._digits = np.concatenate([self._digits, chunk])
        return self._digits[:length]

    def numerators(self, ns, depth: int) -> np.ndarray:
        """``xi_n`` truncated to ``depth`` digits, in units of ``base**-depth``."""
        self.space.check_depth(depth)
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size == 0:
            return np.empty(0, dtype=np.int64)
        if ns.min() < 1:
            raise ValueError("orbit indices start at 1")
        d = self.digits(int(ns.max()) + depth - 1)
        powers = self.space.base ** np.arange(depth - 1, -1, -1, dtype=np.int64)
        windows = np.lib.stride_tricks.sliding_window_view(d, depth)
        return windows[ns - 1] @ powers


def orbit_point(src: OrbitSource, n: int, depth: int) -> Point:
    """``T**(n-1) x`` truncated to ``depth`` digits."""
    if n < 1:
        raise ValueError("orbit indices start at 1")
    src.space.check_depth(depth)
    d = src.digits(n + depth - 1)
    return Point(tuple(int(v) for v in d[n - 1:n - 1 + depth]), src.space.base)


def orbit_csv(src: OrbitSource, n_max: int, depth: int) -> str:
    """Debug dump of ``(n, value)`` for ``n = 1..n_max``."""
    buf = io.StringIO()
    buf.write(f"# schema: orbit v1; seed={src.seed}; trial={src.trial}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "numerator", "denominator", "value"])
    den = src.space.base**depth
    for n, num in zip(range(1, n_max + 1), src.numerators(np.arange(1, n_max + 1), depth)):
        w.writerow([n, int(num), den, repr(int(num) / den)])
    return buf.getvalue()


@dataclass
class DecayRow:
    n: int
    estimate: float
    sigma: float
    n_conditioned: int
    mu_a: float

    @property
    def within_noise(self) -> bool:
        return self.estimate <= 3 * self.sigma


def _in_cylinder(digits: np.ndarray, offset: int, cube: Cube) -> np.ndarray:
    if cube.level == 0:
        return np.ones(digits.shape[0], dtype=bool)
    window = digits[:, offset:offset + cube.level]
    return (window == np.asarray(cube.prefix)).all(axis=1)


def cylinder_measure(space: DigitSpace, cube: Cube) -> float:
    if any(d not in space.alphabet for d in cube.prefix):
        return 0.0
    return len(space.alphabet) ** -cube.level


def mixing_diagnostic(space: DigitSpace, A: Cube, D: Cube, offsets, trials: int,
                      seed: int = 0) -> list:
    """Empirical ``|P(xi_1 in A | xi_{n+1} in D) - mu(A)|`` over a grid of offsets.

    A necessary-condition check for exponential mixing: it conditions on one
    cylinder event rather than the whole future sigma-field. ``sigma`` is the
    binomial standard error of the conditional frequency.
    """
    if trials < 1000:
        raise InsufficientSamplesError("mixing diagnostic needs at least 1000 trials")
    offsets = [int(n) for n in offsets]
    length = max(A.level, max(offsets) + D.level)
    digits = np.stack([OrbitSource(space, seed, t).digits(length) for t in range(trials)])
    mu_a = cylinder_measure(space, A)
    in_a = _in_cylinder(digits, 0, A)
    rows = []
    for n in offsets:
        cond = _in_cylinder(digits, n, D)
        count = int(cond.sum())
        if count == 0:
            raise InsufficientSamplesError(f"conditioning event never observed at offset {n}")
        p = float(in_a[cond].mean())
        sigma = math.sqrt(max(mu_a * (1 - mu_a), 1e-300) / count)
        rows.append(DecayRow(n, abs(p - mu_a), sigma, count, mu_a))
    return rows
