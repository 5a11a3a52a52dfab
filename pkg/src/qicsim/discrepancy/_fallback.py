"""Pure numpy row-subset scan; the compiled kernel reproduces it bit for bit.

For every row subset ``A`` the column sums ``s_y`` are accumulated row by row
in ascending row order, starting from ``0.0``. The positive and negative
parts ``sum_y max(+-s_y, 0)`` are accumulated left to right over ``y``
(``cumsum`` is sequential, unlike ``sum``).
"""

from __future__ import annotations

import numpy as np

LOW_BITS = 14


def subset_sums(rows: np.ndarray) -> np.ndarray:
    """``S[mask] = sum of rows[x] for x in mask``, accumulated in ascending ``x``."""
    n, m = rows.shape
    s = np.zeros((1 << n, m))
    for b in range(n):
        s[1 << b : 2 << b] = s[: 1 << b] + rows[b]
    return s


def scan(m: np.ndarray) -> tuple[float, int]:
    """Best ``max(pos, neg)`` over row subsets, and the smallest row mask attaining it."""
    m = np.ascontiguousarray(m, dtype=float)
    nx = m.shape[0]
    lo = min(nx, LOW_BITS)
    low = subset_sums(m[:lo])
    best, best_mask = 0.0, 0
    for hi in range(1 << (nx - lo)):
        s = low.copy()
        for b in range(nx - lo):
            if hi >> b & 1:
                s += m[lo + b]
        pos = np.cumsum(np.maximum(s, 0.0), axis=1)[:, -1]
        neg = np.cumsum(np.maximum(-s, 0.0), axis=1)[:, -1]
        val = np.maximum(pos, neg)
        k = int(np.argmax(val))
        if val[k] > best:
            best, best_mask = float(val[k]), (hi << lo) | k
    return best, best_mask
