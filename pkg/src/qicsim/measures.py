"""Entropic quantities in bits.

Entropies of subsystems of a pure global state are computed from the Gram
matrix on the smaller side of the bipartition (both sides share their
nonzero spectrum), so the ``dim_cap`` limit applies to ``min(d_S, d_rest)``.
Conditional mutual information always goes through the four-entropy form
``H(AC) + H(BC) - H(ABC) - H(C)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import Settings, resolve
from .errors import DimCapError, DistributionError, LabelError
from .linalg import DensityOperator, GlobalPureState, _split, clamp_spectrum, partial_trace


def _spectrum_entropy(vals: np.ndarray, settings: Settings | None) -> float:
    vals = clamp_spectrum(vals, settings)
    vals = vals[vals > 0]
    return float(-np.sum(vals * np.log2(vals)))


def _labels(labels: Iterable[str] | str) -> list[str]:
    if isinstance(labels, str):
        return [labels]
    return list(labels)


def entropy(
    state: GlobalPureState | DensityOperator,
    labels: Iterable[str] | str,
    settings: Settings | None = None,
) -> float:
    """Von Neumann entropy ``H(labels)`` of the reduced state, in bits.

    An empty label set has entropy 0.
    """
    s = resolve(settings)
    labels = _labels(labels)
    lay = state.layout
    for l in labels:
        lay.index(l)
    if not labels:
        return 0.0
    if isinstance(state, GlobalPureState):
        keep = [l for l in lay.labels if l in set(labels)]
        rest = [l for l in lay.labels if l not in set(labels)]
        dk, dr = lay.sub(keep).total, lay.sub(rest).total
        if min(dk, dr) > s.dim_cap:
            raise DimCapError(f"subsystem side {min(dk, dr)} exceeds dim_cap={s.dim_cap}")
        if dr == 1:
            return 0.0
        m = _split(state.amplitudes, lay, keep)
        g = m @ m.conj().T if dk <= dr else m.conj().T @ m
        return _spectrum_entropy(np.linalg.eigvalsh(g), s)
    rho = partial_trace(state, labels, s)
    return _spectrum_entropy(np.linalg.eigvalsh(rho.matrix), s)


def _disjoint(*groups: list[str]) -> None:
    seen: set[str] = set()
    for g in groups:
        overlap = seen & set(g)
        if overlap:
            raise LabelError(f"label sets overlap on {sorted(overlap)}")
        seen |= set(g)


def cond_entropy(state, a_labels, b_labels, settings: Settings | None = None) -> float:
    """``H(A|B) = H(AB) - H(B)``; negative values signal entanglement."""
    a, b = _labels(a_labels), _labels(b_labels)
    _disjoint(a, b)
    if not a or not b:
        raise LabelError("cond_entropy needs two nonempty label sets")
    return entropy(state, a + b, settings) - entropy(state, b, settings)


def cqmi(state, a_labels, b_labels, c_labels=(), settings: Settings | None = None) -> float:
    """Conditional mutual information ``I(A;B|C)``; ``C`` may be empty."""
    a, b, c = _labels(a_labels), _labels(b_labels), _labels(c_labels)
    _disjoint(a, b, c)
    if not a or not b:
        raise LabelError("cqmi needs nonempty A and B")
    return (
        entropy(state, a + c, settings)
        + entropy(state, b + c, settings)
        - entropy(state, a + b + c, settings)
        - entropy(state, c, settings)
    )


def mutual_information(state, a_labels, b_labels, settings: Settings | None = None) -> float:
    return cqmi(state, a_labels, b_labels, (), settings)


def binary_entropy(p: float) -> float:
    """``-p log p - (1-p) log (1-p)`` with ``H(0) = H(1) = 0``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


@dataclass(frozen=True)
class TvResult:
    """Total-variation distance with the common-part decomposition.

    ``mu1 = (1 - delta) mu0 + delta mu1_rest`` and likewise for ``mu2``.
    ``mu0`` is ``None`` when ``delta == 1``; the remainders equal ``mu0``
    when ``delta == 0``.
    """

    delta: float
    mu0: np.ndarray | None
    mu1_rest: np.ndarray
    mu2_rest: np.ndarray


def tv_distance(mu1, mu2, settings: Settings | None = None) -> TvResult:
    """Half the l1 distance between two probability tables of equal shape."""
    s = resolve(settings)
    p1 = np.asarray(getattr(mu1, "probs", mu1), dtype=float)
    p2 = np.asarray(getattr(mu2, "probs", mu2), dtype=float)
    if p1.shape != p2.shape:
        raise DistributionError(f"shapes differ: {p1.shape} vs {p2.shape}")
    for p in (p1, p2):
        if p.min(initial=0.0) < -s.tol_norm or abs(p.sum() - 1.0) > s.tol_norm:
            raise DistributionError("distribution is not normalized")
    delta = float(0.5 * np.abs(p1 - p2).sum())
    common = np.minimum(p1, p2)
    mass = common.sum()
    mu0 = common / mass if mass > 0 else None
    if delta > 0:
        r1 = (p1 - (1 - delta) * (mu0 if mu0 is not None else 0)) / delta
        r2 = (p2 - (1 - delta) * (mu0 if mu0 is not None else 0)) / delta
        r1, r2 = np.clip(r1, 0, None), np.clip(r2, 0, None)
    else:
        r1 = r2 = mu0
    return TvResult(delta, mu0, r1, r2)
