"""Backend selection for the hot ball/cube kernels.

The compiled extension is used when it imports and the scale fits in int64;
set ``COVSETS_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _kernels_py

_INT64_SAFE = 2**62

try:
    if os.environ.get("COVSETS_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend forced")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def _pick(scale, backend):
    if backend not in (None, "compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "python" or _compiled is None:
        return _kernels_py
    return _compiled if scale < _INT64_SAFE else _kernels_py


def block_cover(centers, radii, level, scale, base, x_masks, g_masks=None,
                tail_hi=False, tail_lo=False, backend=None):
    mod = _pick(scale, backend)
    return mod.block_cover(centers, radii, level, scale, base, x_masks,
                           g_masks, tail_hi, tail_lo)


def target_meets(cube_id, level, base, g_masks, tail_hi, tail_lo, backend=None):
    mod = _pick(base ** level, backend)
    return mod.target_meets(cube_id, level, base, g_masks, tail_hi, tail_lo)


def prefix_filter(ids, level, base, masks, backend=None):
    mod = _pick(base ** level, backend)
    return mod.prefix_filter(ids, level, base, masks)
