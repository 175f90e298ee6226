"""Dimension regression, dimension-formula predictions and Wilson intervals."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, InsufficientSamplesError, OutOfTheoryError

MIN_POINTS = 5


@dataclass
class DimEstimate:
    """Least-squares slope of ``log_m N_k`` against ``k``.

    ``suffix_max`` is the largest slope over trailing sub-windows of at least
    ``MIN_POINTS`` levels, a limsup-side diagnostic reported next to the slope.
    """

    slope: float
    stderr: float
    r2: float
    k1: int
    k2: int
    base: int
    counts: dict = field(default_factory=dict)
    suffix_max: float = float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = {str(k): v for k, v in self.counts.items()}
        return d


def _as_table(counts) -> dict:
    if isinstance(counts, dict):
        return {int(k): float(v) for k, v in counts.items()}
    return {k: float(v) for k, v in enumerate(np.asarray(counts, dtype=float))}


def box_dimension(counts, base: int, window: tuple | None = None) -> DimEstimate:
    """Box-counting slope from a level table ``k -> N_k``.

    ``counts`` is a mapping or an array indexed by level. The default window
    takes the levels with ``N_k > 0`` and drops the three coarsest and the
    finest of them.
    """
    table = _as_table(counts)
    usable = sorted(k for k, v in table.items() if v > 0)
    if window is None:
        ks = usable[3:-1]
    else:
        k1, k2 = window
        ks = [k for k in usable if k1 <= k <= k2]
    if len(ks) < MIN_POINTS:
        raise InsufficientDataError(f"need {MIN_POINTS} levels with N_k >= 1, have {len(ks)}")
    x = np.array(ks, dtype=float)
    y = np.log([table[k] for k in ks]) / math.log(base)
    fit = stats.linregress(x, y)
    suffix = max(stats.linregress(x[i:], y[i:]).slope for i in range(len(ks) - MIN_POINTS + 1))
    return DimEstimate(float(fit.slope), float(fit.stderr), float(fit.rvalue**2),
                       ks[0], ks[-1], base, {k: table[k] for k in ks}, float(suffix))


class Regime(enum.Enum):
    EMPTY = "Empty"
    CRITICAL = "IndeterminateCritical"
    BOUNDS = "Lower+Upper bounds"
    EXACT = "Exact"


@dataclass
class Prediction:
    regime: Regime
    dim_h_lower: float
    dim_h_upper: float
    dim_p: float | None
    s: float
    alpha: float
    dim_h_g: float
    dim_p_g: float
    hit_probability: float | None

    @property
    def label(self) -> str:
        return self.regime.value

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        # JSON has no infinities; the empty-set dimension is written as "-inf"
        return {k: ("-inf" if v == float("-inf") else v) for k, v in d.items()}


def predict(s: float, alpha: float, dim_h_g: float, dim_p_g: float,
            condition_c: bool = False, atol: float = 1e-9) -> Prediction:
    """Dimension of ``E n G`` and hitting probability for a target with the given dims.

    ``-inf`` dims encode an empty target. The upper bound ``dim_p_g + alpha - s``
    always applies; the lower bound needs ``dim_h_g > s - alpha``; the
    packing dimension ``dim_P(E n G) = dim_P G`` is only reported when
    ``condition_c`` holds.
    """
    if not 0 < alpha < s:
        raise OutOfTheoryError(f"need 0 < alpha < s, got alpha={alpha}, s={s}")
    if dim_h_g > dim_p_g + atol:
        raise ValueError("dim_H G cannot exceed dim_P G")
    gap = s - alpha
    ninf = float("-inf")
    if dim_p_g < gap - atol:
        return Prediction(Regime.EMPTY, ninf, ninf, ninf, s, alpha, dim_h_g, dim_p_g, 0.0)
    upper = dim_p_g + alpha - s
    dim_p = dim_p_g if (condition_c and dim_p_g > gap + atol) else None
    if dim_h_g <= gap + atol:
        return Prediction(Regime.CRITICAL, ninf, upper, dim_p, s, alpha, dim_h_g, dim_p_g, None)
    lower = dim_h_g + alpha - s
    regime = Regime.EXACT if abs(dim_h_g - dim_p_g) <= atol else Regime.BOUNDS
    if regime is Regime.EXACT:
        lower = upper
    return Prediction(regime, lower, upper, dim_p, s, alpha, dim_h_g, dim_p_g, 1.0)


@dataclass
class HitEstimate:
    p_hat: float
    lo: float
    hi: float
    n: int
    hits: int

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_interval(hits: int, n: int, level: float = 0.95) -> tuple:
    z = stats.norm.ppf(0.5 + level / 2)
    p = hits / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the endpoints are exact at 0 and n hits; rounding would leave ~1e-18
    lo = 0.0 if hits == 0 else max(0.0, mid - half)
    hi = 1.0 if hits == n else min(1.0, mid + half)
    return float(lo), float(hi)


def hit_probability(flags, min_trials: int = 30) -> HitEstimate:
    flags = [bool(f) for f in flags]
    if not flags:
        raise InsufficientSamplesError("no trials")
    if len(flags) < min_trials:
        raise InsufficientSamplesError(f"need at least {min_trials} trials, got {len(flags)}")
    hits = sum(flags)
    lo, hi = wilson_interval(hits, len(flags))
    return HitEstimate(hits / len(flags), lo, hi, len(flags), hits)
