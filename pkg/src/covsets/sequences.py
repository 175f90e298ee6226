"""Radius sequences, scale-band block counts and the Besicovitch-Taylor index.

Radii are exact rationals. Block ``k`` collects the indices ``n`` whose radius
falls in ``[b**(k-1), b**(k-2))``; because radii are non-increasing every
block is a contiguous index range, so blocks are stored as ``(start, count)``
and never materialized as lists unless asked for.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import TruncationError, UndefinedEstimateError


def iroot(x: int, n: int) -> int:
    """Floor of the real ``n``-th root of a non-negative integer."""
    if x < 0:
        raise ValueError("negative radicand")
    if x < 2 or n == 1:
        return x
    r = 1 << ((x.bit_length() + n - 1) // n)
    while True:
        y = ((n - 1) * r + x // r ** (n - 1)) // n
        if y >= r:
            break
        r = y
    while r**n > x:
        r -= 1
    while (r + 1) ** n <= x:
        r += 1
    return r


def _inv_int(b: Fraction) -> int:
    b = Fraction(b)
    if b.numerator != 1 or b.denominator < 2:
        raise ValueError("scale b must be 1/q for an integer q >= 2")
    return b.denominator


@dataclass(frozen=True)
class RadiusSequence:
    """Non-increasing positive radii ``l_1 >= l_2 >= ...`` tending to zero.

    ``kind`` is one of ``"power"`` (``l_n = n**(-1/alpha0)`` rounded down to a
    multiple of ``base**-grid``), ``"profile"`` (prescribed block counts) or
    ``"list"`` (explicit finite list).
    """

    kind: str
    base: int
    alpha0: Fraction | None = None
    profile: tuple = ()
    radii: tuple = ()
    grid: int = 48
    max_terms: int | None = None

    @classmethod
    def power_law(cls, alpha0, base, grid=48, max_terms=None):
        alpha0 = Fraction(str(alpha0)) if isinstance(alpha0, float) else Fraction(alpha0)
        if alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        return cls("power", base, alpha0=alpha0, grid=grid, max_terms=max_terms)

    @classmethod
    def block_profile(cls, counts, base, grid=48):
        items = tuple(sorted((int(k), int(v)) for k, v in dict(counts).items() if int(v) > 0))
        if any(k < 1 for k, _ in items):
            raise ValueError("profile blocks start at k = 1")
        return cls("profile", base, profile=items, grid=grid)

    @classmethod
    def explicit(cls, radii, base=2):
        radii = tuple(Fraction(r) for r in radii)
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("radii must be positive")
        if any(a < b for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be non-increasing")
        return cls("list", base, radii=radii)

    @property
    def length(self) -> int | None:
        if self.kind == "list":
            return len(self.radii)
        if self.kind == "profile":
            return sum(v for _, v in self.profile)
        return None

    # -- exact evaluation -------------------------------------------------
    def radius(self, n: int) -> Fraction:
        if n < 1:
            raise IndexError("indices start at 1")
        if self.kind == "list":
            if n > len(self.radii):
                raise TruncationError(f"index {n} beyond explicit list of {len(self.radii)}")
            return self.radii[n - 1]
        if self.kind == "power":
            # floor(n**(-p/q) * m**G) via integer q-th root, with 1/alpha0 = p/q
            p, q = self.alpha0.denominator, self.alpha0.numerator
            scale = self.base**self.grid
            return Fraction(iroot(scale**q // n**p, q), scale)
        return self._profile_radius(n)

    def _profile_radius(self, n):
        start = 1
        inv_b = self.base
        for k, count in self.profile:
            if n < start + count:
                j = n - start + 1
                lo = Fraction(1, inv_b ** (k - 1))
                hi = lo * inv_b
                raw = lo + (hi - lo) * (count + 1 - j) / (count + 1)
                scale = self.base**self.grid
                return Fraction(math.floor(raw * scale), scale)
            start += count
        raise TruncationError(f"index {n} beyond the profile's {start - 1} radii")

    def count_at_least(self, r: Fraction) -> int:
        """``#{n : l_n >= r}`` computed exactly."""
        r = Fraction(r)
        if r <= 0:
            raise ValueError("threshold must be positive")
        if self.kind == "list":
            lo, hi = 0, len(self.radii)
            while lo < hi:
                mid = (lo + hi) // 2
                if self.radii[mid] >= r:
                    lo = mid + 1
                else:
                    hi = mid
            return lo
        if self.kind == "profile":
            total, start = 0, 1
            for _, count in self.profile:
                last = start + count - 1
                if self.radius(last) >= r:
                    total += count
                elif self.radius(start) < r:
                    break
                else:
                    lo, hi = start, last
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if self.radius(mid) >= r:
                            lo = mid + 1
                        else:
                            hi = mid
                    return total + lo - start
                start = last + 1
            return total
        scale = self.base**self.grid
        t = math.ceil(r * scale)
        if t > scale:
            return 0
        p, q = self.alpha0.denominator, self.alpha0.numerator
        # l_n >= t/scale  <=>  n**p * t**q <= scale**q
        count = iroot(scale**q // t**q, p)
        if self.max_terms is not None and count > self.max_terms:
            raise TruncationError(
                f"threshold {r} needs {count} terms, more than max_terms={self.max_terms}")
        return count

    def radius_units(self, ns, scale: int) -> list:
        """``floor(l_n * scale)`` for each ``n`` in ``ns``."""
        if self.kind == "power":
            p, q = self.alpha0.denominator, self.alpha0.numerator
            top = scale**q
            return [iroot(top // int(n) ** p, q) for n in ns]
        return [math.floor(self.radius(int(n)) * scale) for n in ns]

    def materialize(self, upto: int) -> list:
        return [self.radius(n) for n in range(1, upto + 1)]

    def to_config(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "alpha0": str(self.alpha0), "base": self.base,
                    "grid": self.grid}
        if self.kind == "profile":
            return {"kind": "profile", "base": self.base,
                    "counts": {str(k): v for k, v in self.profile}}
        return {"kind": "list", "base": self.base, "radii": [str(r) for r in self.radii]}


def default_gap_constant(s: float, alpha: float, base: int) -> float:
    """Index gap constant ``c`` for sparse blocks: twice the minimal ``(s - alpha)/log(1/rho)``.

    ``rho = 1/base`` is the correlation decay of i.i.d. base-m digits.
    """
    if alpha >= s:
        raise ValueError("gap constant needs alpha < s")
    return 2.0 * (s - alpha) / math.log(base)


@dataclass(frozen=True)
class BlockTable:
    """Per-block counts ``n_k`` (k = 1..K), their index ranges and sparse selections."""

    b: Fraction
    K: int
    counts: dict
    starts: dict
    c: float | None = None
    total: int = 0
    overflow: int = 0
    seq: RadiusSequence | None = field(default=None, compare=False, repr=False)

    @property
    def inv_b(self) -> int:
        return _inv_int(self.b)

    @property
    def b_outside_theory_range(self) -> bool:
        """Scale ``b >= 1/3`` lies outside the range the theory fixes for ``b``."""
        return self.b >= Fraction(1, 3)

    def n(self, k: int) -> int:
        return self.counts.get(k, 0)

    def block_indices(self, k: int) -> range:
        start = self.starts[k]
        return range(start, start + self.counts[k])

    def gap(self, k: int) -> int:
        if self.c is None:
            raise ValueError("no gap constant set; call sparse_indices first")
        return max(1, math.ceil(self.c * k - 1e-12))

    def sparse(self, k: int) -> range:
        """Greedy left-to-right maximal selection with mutual gaps >= ceil(c k)."""
        rng = self.block_indices(k)
        return range(rng.start, rng.stop, self.gap(k))

    def m(self, k: int) -> int:
        if self.counts.get(k, 0) == 0:
            return 0
        return len(self.sparse(k))

    def log_ratio(self, k: int) -> float:
        n = self.counts.get(k, 0)
        return math.log(n) / (k * math.log(self.inv_b)) if n > 0 else float("nan")

    def rows(self):
        for k in range(1, self.K + 1):
            m_k = self.m(k) if self.c is not None else ""
            yield (k, self.n(k), m_k, self.log_ratio(k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: block-table v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "n_k", "m_k", "log_ratio"])
        for k, n, m_k, lr in self.rows():
            w.writerow([k, n, m_k, "" if math.isnan(lr) else f"{lr:.12g}"])
        return buf.getvalue()


def block_counts(seq: RadiusSequence, b, K: int) -> BlockTable:
    """Count radii per scale band ``[b**(k-1), b**(k-2))`` for ``k = 1..K``."""
    b = Fraction(b)
    inv_b = _inv_int(b)
    if K < 3:
        raise ValueError("K must be >= 3")
    cum = {j: seq.count_at_least(Fraction(inv_b) ** (-j)) for j in range(-1, K)}
    counts, starts = {}, {}
    for k in range(1, K + 1):
        counts[k] = cum[k - 1] - cum[k - 2]
        starts[k] = cum[k - 2] + 1
    return BlockTable(b=b, K=K, counts=counts, starts=starts,
                      total=cum[K - 1], overflow=cum[-1], seq=seq)


def sparse_indices(table: BlockTable, c) -> BlockTable:
    if c <= 0:
        raise ValueError("gap constant must be positive")
    return replace(table, c=float(c))


def _window_blocks(table: BlockTable, window: int):
    if not 3 <= window <= table.K:
        raise ValueError("need 3 <= window <= K")
    ks = [k for k in range(table.K - window + 1, table.K + 1) if table.n(k) > 0]
    if not ks:
        raise UndefinedEstimateError("every block in the window is empty")
    return ks


def bt_index_details(table: BlockTable, window: int | None = None) -> dict:
    """Trailing-window proxies for ``limsup_k log_{1/b}(n_k) / k``.

    ``raw`` is the window maximum of the ratio itself; it carries an
    ``O(1/k)`` bias from the constant in ``n_k ~ C b**(-alpha k)``. ``slope``
    is the least-squares growth rate of ``log_{1/b} n_k`` over the non-empty
    window blocks, which removes that constant. The estimate is the larger.
    """
    window = window or max(3, table.K // 2)
    ks = _window_blocks(table, window)
    ratios = [table.log_ratio(k) for k in ks]
    raw = max(ratios)
    slope = float("-inf")
    if len(ks) >= 3:
        y = [math.log(table.n(k)) / math.log(table.inv_b) for k in ks]
        slope = float(np.polyfit(ks, y, 1)[0])
    return {"raw": raw, "slope": slope, "estimate": max(raw, slope), "blocks": ks}


def bt_index_estimate(table: BlockTable, window: int | None = None) -> float:
    return bt_index_details(table, window)["estimate"]


@dataclass
class ConditionCResult:
    holds_on_prefix: bool
    witness: list = field(default_factory=list)
    tail_max_ratio: float = float("inf")
    b_outside_theory_range: bool = False

    def to_dict(self):
        return {"holds_on_prefix": self.holds_on_prefix, "witness": self.witness,
                "tail_max_ratio": self.tail_max_ratio,
                "b_outside_theory_range": self.b_outside_theory_range}


def condition_c_check(table: BlockTable, alpha: float, tol: float = 0.1) -> ConditionCResult:
    """Prefix consistency of the block-index condition.

    Selects every block whose ratio ``log_{1/b}(n_k)/k`` lies within ``tol`` of
    ``alpha``. Holds when the selection is dense in the trailing half of the
    range: at least two selected blocks there, consecutive ratios ``<= 1 + tol``,
    and no open gap to ``K`` wider than that.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    witness = [k for k in range(1, table.K + 1)
               if table.n(k) > 0 and abs(table.log_ratio(k) - alpha) <= tol]
    result = ConditionCResult(False, witness, float("inf"), table.b_outside_theory_range)
    tail = [k for k in witness if 2 * k >= table.K]
    if len(tail) < 2:
        return result
    ratios = [b / a for a, b in zip(tail, tail[1:])] + [table.K / tail[-1]]
    result.tail_max_ratio = max(ratios)
    result.holds_on_prefix = result.tail_max_ratio <= 1 + tol
    return result
