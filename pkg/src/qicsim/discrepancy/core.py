"""Rectangle discrepancy and the generalized discrepancy bound for small tables.

``disc^mu(g)`` is the largest ``|sum_{(x,y) in A x B} (-1)^g(x,y) mu(x,y)|``
over row sets ``A`` and column sets ``B`` (empty sets allowed).
``GDM_delta^mu(f)`` maximizes ``log2(1 / disc^mu(g))`` over tables ``g``
that differ from ``f`` on a set of ``mu``-mass at most ``delta``.

Witnesses are bitmasks with bit ``x`` for row ``x`` (and bit ``y`` for column
``y``); ties go to the smallest ``(row mask, column mask)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import Settings, resolve
from ..engine import InputDistribution, disj_values, simplex_grid
from ..errors import InputError, SizeLimitError
from . import _fallback

ORACLE_MAX_BITS = 24
FAST_MAX_ROWS = 24
GDM_MAX_CELLS = 20
GRID_MAX_POINTS = 200_000


@dataclass(frozen=True, eq=False)
class BooleanTable:
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values)
        if v.ndim != 2 or 0 in v.shape:
            raise InputError(f"truth table must be 2-D and nonempty, got shape {v.shape}")
        if not np.isin(v, (0, 1)).all():
            raise InputError("truth table entries must be 0 or 1")
        v = v.astype(np.int8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x_size(self) -> int:
        return self.values.shape[0]

    @property
    def y_size(self) -> int:
        return self.values.shape[1]

    @classmethod
    def xor(cls) -> "BooleanTable":
        return cls([[0, 1], [1, 0]])

    @classmethod
    def disj(cls, n: int) -> "BooleanTable":
        return cls(disj_values(n))

    @classmethod
    def constant(cls, x_size: int, y_size: int, value: int = 0) -> "BooleanTable":
        return cls(np.full((x_size, y_size), value))

    def flip(self, mask: int) -> "BooleanTable":
        """Flip the cells in ``mask`` (bit ``x * y_size + y`` for cell ``(x, y)``)."""
        bits = (mask >> np.arange(self.values.size)) & 1
        return BooleanTable(self.values ^ bits.reshape(self.values.shape).astype(np.int8))


@dataclass(frozen=True)
class DiscResult:
    value: float
    rows: tuple[int, ...]
    cols: tuple[int, ...]

    @property
    def row_mask(self) -> int:
        return sum(1 << x for x in self.rows)

    @property
    def col_mask(self) -> int:
        return sum(1 << y for y in self.cols)


def _signed(g: BooleanTable, mu) -> np.ndarray:
    p = np.asarray(getattr(mu, "probs", mu), dtype=float)
    if p.shape != g.values.shape:
        raise InputError(f"distribution shape {p.shape} differs from table shape {g.values.shape}")
    return np.where(g.values == 1, -p, p)


def _bits(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def witness_sum(g: BooleanTable, mu, rows, cols) -> float:
    """``|sum_{y in cols} sum_{x in rows} (-1)^g mu|`` with both sums in ascending order."""
    m = _signed(g, mu)
    total = 0.0
    for y in sorted(cols):
        s = 0.0
        for x in sorted(rows):
            s = s + m[x, y]
        total = total + s
    return abs(total)


def disc_oracle(g: BooleanTable, mu) -> DiscResult:
    """Enumerate every rectangle ``A x B``."""
    if g.x_size + g.y_size > ORACLE_MAX_BITS:
        raise SizeLimitError(f"oracle needs x_size + y_size <= {ORACLE_MAX_BITS}")
    m = _signed(g, mu)
    best, best_a, best_b = 0.0, 0, 0
    for a in range(1 << g.x_size):
        s = 0.0 * m[0]
        for x in range(g.x_size):
            if a >> x & 1:
                s = s + m[x]
        t = _fallback.subset_sums(s[:, None]).ravel()
        vals = np.abs(t)
        b = int(np.argmax(vals))
        if vals[b] > best:
            best, best_a, best_b = float(vals[b]), a, b
    return DiscResult(best, _bits(best_a), _bits(best_b))


def _backend():
    from . import scan

    return scan


def _columns_for(m: np.ndarray, rows: int) -> int:
    s = np.zeros(m.shape[1])
    for x in _bits(rows):
        s = s + m[x]
    pos = np.cumsum(np.maximum(s, 0.0))[-1]
    neg = np.cumsum(np.maximum(-s, 0.0))[-1]
    pos_mask = sum(1 << int(y) for y in np.flatnonzero(s > 0))
    neg_mask = sum(1 << int(y) for y in np.flatnonzero(s < 0))
    if pos > neg:
        return pos_mask
    if neg > pos:
        return neg_mask
    return min(pos_mask, neg_mask)


def disc_fast(g: BooleanTable, mu) -> DiscResult:
    """For each row set, the best column set takes every column of one sign."""
    if g.x_size > FAST_MAX_ROWS:
        raise SizeLimitError(f"disc_fast needs x_size <= {FAST_MAX_ROWS}")
    m = _signed(g, mu)
    value, rows = _backend()(m)
    cols = _columns_for(m, rows) if rows else 0
    return DiscResult(value, _bits(rows), _bits(cols))


def _batch_disc(signed: np.ndarray) -> np.ndarray:
    """``disc`` of a stack of signed tables ``(n, X, Y)``, same arithmetic as the scan."""
    n, nx, ny = signed.shape
    s = np.zeros((n, 1 << nx, ny))
    for b in range(nx):
        s[:, 1 << b : 2 << b] = s[:, : 1 << b] + signed[:, b][:, None, :]
    pos = np.cumsum(np.maximum(s, 0.0), axis=2)[..., -1]
    neg = np.cumsum(np.maximum(-s, 0.0), axis=2)[..., -1]
    return np.maximum(pos, neg).max(axis=1)


@dataclass(frozen=True, eq=False)
class GdmResult:
    value: float
    disc: float
    witness: BooleanTable
    flip_mask: int
    examined: int


def _flip_order(mu_flat: np.ndarray, delta: float, tol: float) -> np.ndarray:
    """Flip masks (over all cells) with mass <= delta, by size then mask.

    Only cells that are light enough to be flipped at all are enumerated.
    """
    light = np.flatnonzero(mu_flat <= delta + tol)
    if light.size > GDM_MAX_CELLS:
        raise SizeLimitError(
            f"{light.size} cells have mass <= delta; enumeration supports {GDM_MAX_CELLS}"
        )
    n = light.size
    mass = np.zeros(1 << n)
    full = np.zeros(1 << n, dtype=np.int64)
    pop = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        mass[1 << b : 2 << b] = mass[: 1 << b] + mu_flat[light[b]]
        full[1 << b : 2 << b] = full[: 1 << b] | (1 << int(light[b]))
        pop[1 << b : 2 << b] = pop[: 1 << b] + 1
    keep = np.flatnonzero(mass <= delta + tol)
    # within a size class, ascending local masks are ascending full masks
    keep = keep[np.argsort(pop[keep], kind="stable")]
    return full[keep]


def gdm_delta(
    f: BooleanTable,
    mu,
    delta: float,
    settings: Settings | None = None,
    batch: int | None = None,
) -> GdmResult:
    """Exact ``GDM_delta^mu(f)`` by enumerating flip sets.

    Flip sets are scanned by size, then mask; the first one reaching the
    smallest discrepancy wins. The scan stops early once the incumbent equals
    the largest single-cell mass, a lower bound on every table's discrepancy.
    At most ``GDM_MAX_CELLS`` cells may have mass ``<= delta``.
    """
    s = resolve(settings)
    cells = f.x_size * f.y_size
    if f.x_size > FAST_MAX_ROWS:
        raise SizeLimitError(f"gdm_delta needs x_size <= {FAST_MAX_ROWS}")
    if not 0.0 <= delta <= 1.0:
        raise InputError("delta must lie in [0, 1]")
    p = np.asarray(getattr(mu, "probs", mu), dtype=float)
    if p.shape != f.values.shape:
        raise InputError("distribution and table shapes differ")
    base = np.where(f.values == 1, -p, p)
    floor = float(p.max())
    order = _flip_order(p.ravel(), delta, s.tol_norm)
    if batch is None:
        batch = max(1, (1 << 22) // ((1 << f.x_size) * f.y_size))
    best, best_mask, examined = math.inf, 0, 0
    for start in range(0, order.size, batch):
        part = order[start : start + batch]
        chunk = ((part[:, None] >> np.arange(cells)[None, :]) & 1).reshape(-1, f.x_size, f.y_size)
        signed = np.where(chunk == 1, -base[None], base[None])
        d = _batch_disc(signed)
        examined += d.size
        k = int(np.argmin(d))
        if d[k] < best:
            best, best_mask = float(d[k]), int(part[k])
        if best <= floor:
            break
    g = f.flip(best_mask)
    return GdmResult(math.log2(1.0 / best), best, g, best_mask, examined)


@dataclass(frozen=True, eq=False)
class GdmSearch:
    value: float
    mu: InputDistribution
    result: GdmResult
    evaluated: int


def gdm_search(
    f: BooleanTable, delta: float, grid_step: float, settings: Settings | None = None
) -> GdmSearch:
    """Grid lower bound on ``max_mu GDM_delta^mu(f)``; the first maximizer in scan order wins."""
    m = round(1 / grid_step)
    if grid_step <= 0 or abs(m * grid_step - 1) > 1e-9:
        raise InputError("1/grid_step must be a positive integer")
    cells = f.x_size * f.y_size
    if cells > GDM_MAX_CELLS:
        raise SizeLimitError(f"grid search needs x_size * y_size <= {GDM_MAX_CELLS}")
    points = math.comb(m + cells - 1, cells - 1)
    if points > GRID_MAX_POINTS:
        raise SizeLimitError(f"grid has {points} points, limit is {GRID_MAX_POINTS}")
    best = None
    count = 0
    for comp in simplex_grid(cells, m):
        mu = InputDistribution(np.array(comp, dtype=float).reshape(f.values.shape) / m)
        r = gdm_delta(f, mu, delta, settings)
        count += 1
        if best is None or r.value > best[0]:
            best = (r.value, mu, r)
    return GdmSearch(best[0], best[1], best[2], count)
