"""Pure-Python ball/cube kernels.

Reference implementation of the routines in ``_kernels.pyx``. Works on
arbitrary-size Python integers, so it also serves scales that overflow int64.

All geometry is expressed in integer units of ``1/scale``; a level-``j`` cube
with positional id ``p`` covers ``[p*W_j, (p+1)*W_j]`` where ``W_j = scale // base**j``.
"""
import numpy as np


def _digits_ok(cube_id, level, base, masks):
    for j in range(level, 0, -1):
        if not (masks[j] >> (cube_id % base)) & 1:
            return False
        cube_id //= base
    return True


def target_meets(cube_id, level, base, g_masks, tail_hi, tail_lo):
    """Closed level-``level`` cube ``cube_id`` meets the digit-restricted target."""
    if _digits_ok(cube_id, level, base, g_masks):
        return True
    if tail_hi and cube_id > 0 and _digits_ok(cube_id - 1, level, base, g_masks):
        return True
    if tail_lo and cube_id + 1 < base ** level and _digits_ok(cube_id + 1, level, base, g_masks):
        return True
    return False


def block_cover(centers, radii, level, scale, base, x_masks,
                g_masks=None, tail_hi=False, tail_lo=False):
    """Classify level-``level`` cubes against a batch of closed balls.

    Walks the cube tree top-down, pruning subtrees disjoint from the ball.

    Returns
    -------
    contained : ndarray of int64
        Sorted unique ids of cubes contained in at least one ball.
    touched : ndarray of int64
        Sorted unique ids of cubes meeting at least one ball.
    max_leaves : int
        Largest number of level-``level`` cubes meeting a single ball.

    When ``g_masks`` is given, both outputs are restricted to cubes whose
    closed interval meets the target.
    """
    widths = [scale // base ** j for j in range(level + 1)]
    digits = [[d for d in range(base) if (x_masks[j] >> d) & 1] if j else []
              for j in range(level + 1)]
    contained, touched = set(), set()
    max_leaves = 0
    for c, r in zip(centers, radii):
        c, r = int(c), int(r)
        lo, hi = c - r, c + r
        leaves = 0
        stack = [(0, 0)]
        while stack:
            j, p = stack.pop()
            w = widths[j]
            left = p * w
            if left > hi or left + w < lo:
                continue
            if j == level:
                leaves += 1
                if g_masks is not None and not target_meets(p, level, base, g_masks,
                                                           tail_hi, tail_lo):
                    continue
                touched.add(p)
                if left >= lo and left + w <= hi:
                    contained.add(p)
                continue
            for d in digits[j + 1]:
                stack.append((j + 1, p * base + d))
        max_leaves = max(max_leaves, leaves)
    return (np.array(sorted(contained), dtype=object if scale >= 2**62 else np.int64),
            np.array(sorted(touched), dtype=object if scale >= 2**62 else np.int64),
            max_leaves)


def prefix_filter(ids, level, base, masks):
    """Boolean mask of ``ids`` whose digits are all allowed by ``masks``."""
    return np.array([_digits_ok(int(p), level, base, masks) for p in ids], dtype=bool)
