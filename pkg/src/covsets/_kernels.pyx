# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled ball/cube kernels; semantics identical to ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector
from libcpp.set cimport set as cset

cnp.import_array()

ctypedef long long i64


cdef inline bint _digits_ok(i64 cube_id, int level, i64 base, const i64[:] masks) nogil:
    cdef int j
    for j in range(level, 0, -1):
        if not ((masks[j] >> (cube_id % base)) & 1):
            return False
        cube_id = cube_id // base
    return True


cdef inline bint _target_meets(i64 cube_id, int level, i64 base, const i64[:] g_masks,
                               bint tail_hi, bint tail_lo, i64 n_cells) nogil:
    if _digits_ok(cube_id, level, base, g_masks):
        return True
    if tail_hi and cube_id > 0 and _digits_ok(cube_id - 1, level, base, g_masks):
        return True
    if tail_lo and cube_id + 1 < n_cells and _digits_ok(cube_id + 1, level, base, g_masks):
        return True
    return False


def target_meets(i64 cube_id, int level, i64 base, g_masks, bint tail_hi, bint tail_lo):
    cdef const i64[:] gm = np.ascontiguousarray(g_masks, dtype=np.int64)
    cdef i64 n_cells = 1
    cdef int j
    for j in range(level):
        n_cells *= base
    return bool(_target_meets(cube_id, level, base, gm, tail_hi, tail_lo, n_cells))


def block_cover(centers, radii, int level, i64 scale, i64 base, x_masks,
                g_masks=None, bint tail_hi=False, bint tail_lo=False):
    cdef const i64[:] cs = np.ascontiguousarray(centers, dtype=np.int64)
    cdef const i64[:] rs = np.ascontiguousarray(radii, dtype=np.int64)
    cdef const i64[:] xm = np.ascontiguousarray(x_masks, dtype=np.int64)
    cdef bint use_g = g_masks is not None
    cdef const i64[:] gm = np.ascontiguousarray(g_masks if use_g else x_masks, dtype=np.int64)
    cdef vector[i64] widths
    cdef vector[i64] stack_j, stack_p
    cdef cset[i64] contained, touched
    cdef Py_ssize_t b, nb = cs.shape[0]
    cdef int j, d
    cdef i64 p, w, left, lo, hi, leaves, max_leaves = 0, n_cells = 1
    w = scale
    for j in range(level + 1):
        widths.push_back(w)
        w = w // base
    for j in range(level):
        n_cells *= base
    with nogil:
        for b in range(nb):
            lo = cs[b] - rs[b]
            hi = cs[b] + rs[b]
            leaves = 0
            stack_j.clear()
            stack_p.clear()
            stack_j.push_back(0)
            stack_p.push_back(0)
            while stack_j.size() > 0:
                j = stack_j.back()
                p = stack_p.back()
                stack_j.pop_back()
                stack_p.pop_back()
                w = widths[j]
                left = p * w
                if left > hi or left + w < lo:
                    continue
                if j == level:
                    leaves += 1
                    if use_g and not _target_meets(p, level, base, gm, tail_hi, tail_lo, n_cells):
                        continue
                    touched.insert(p)
                    if left >= lo and left + w <= hi:
                        contained.insert(p)
                    continue
                for d in range(<int>base - 1, -1, -1):
                    if (xm[j + 1] >> d) & 1:
                        stack_j.push_back(j + 1)
                        stack_p.push_back(p * base + d)
            if leaves > max_leaves:
                max_leaves = leaves
    return _to_array(contained), _to_array(touched), int(max_leaves)


cdef object _to_array(cset[i64]& values):
    out = np.empty(values.size(), dtype=np.int64)
    cdef i64[:] ov = out
    cdef Py_ssize_t i = 0
    cdef i64 v
    for v in values:
        ov[i] = v
        i += 1
    return out


def prefix_filter(ids, int level, i64 base, masks):
    cdef const i64[:] arr = np.ascontiguousarray(ids, dtype=np.int64)
    cdef const i64[:] mk = np.ascontiguousarray(masks, dtype=np.int64)
    out = np.zeros(arr.shape[0], dtype=np.bool_)
    cdef cnp.uint8_t[:] ov = out.view(np.uint8)
    cdef Py_ssize_t i
    with nogil:
        for i in range(arr.shape[0]):
            ov[i] = _digits_ok(arr[i], level, base, mk)
    return out
