# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-subset scan with the same floating-point schedule as ``_fallback.scan``.

Subsets are visited depth first, adding rows in ascending order to a running
column-sum vector that starts at 0.0; the result is reduced with the same
(value, smallest mask) rule, so the output matches the numpy path exactly.
"""

import numpy as np
cimport numpy as cnp


cdef void _visit(
    const double[:, ::1] m,
    double[:, ::1] stack,
    int depth,
    int start,
    long long mask,
    double* best,
    long long* best_mask,
) noexcept nogil:
    cdef int nx = m.shape[0]
    cdef int ny = m.shape[1]
    cdef int x, y
    cdef double pos, neg, s, val
    cdef long long sub
    for x in range(start, nx):
        sub = mask | (1LL << x)
        pos = 0.0
        neg = 0.0
        for y in range(ny):
            s = stack[depth, y] + m[x, y]
            stack[depth + 1, y] = s
            if s > 0.0:
                pos = pos + s
            elif s < 0.0:
                neg = neg + (-s)
        val = pos if pos >= neg else neg
        if val > best[0] or (val == best[0] and sub < best_mask[0]):
            best[0] = val
            best_mask[0] = sub
        _visit(m, stack, depth + 1, x + 1, sub, best, best_mask)


def scan(m):
    """Best ``max(pos, neg)`` over row subsets, and the smallest row mask attaining it."""
    cdef const double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef int nx = mv.shape[0]
    cdef double[:, ::1] stack = np.zeros((nx + 1, mv.shape[1]))
    cdef double best = 0.0
    cdef long long best_mask = 0
    with nogil:
        _visit(mv, stack, 0, 0, 0, &best, &best_mask)
    return float(best), int(best_mask)
