"""Seeded random objects for property tests and random protocols.

States and isometries are Haar distributed (normalized complex Gaussians,
QR with the phase of ``R``'s diagonal removed). Random density operators
are marginals of larger random pure states.
"""

from __future__ import annotations

import numpy as np

from .linalg import DensityOperator, GlobalPureState, Isometry, RegisterLayout


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_state(rng: np.random.Generator, layout: RegisterLayout) -> GlobalPureState:
    v = complex_gaussian(rng, layout.total)
    return GlobalPureState(layout, v / np.linalg.norm(v))


def random_isometry_matrix(rng: np.random.Generator, d_out: int, d_in: int) -> np.ndarray:
    if d_out < d_in:
        raise ValueError(f"isometry needs d_out >= d_in, got {d_out} < {d_in}")
    q, r = np.linalg.qr(complex_gaussian(rng, (d_out, d_in)))
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph[None, :]


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    return random_isometry_matrix(rng, n, n)


def random_isometry(rng: np.random.Generator, inputs: RegisterLayout, outputs: RegisterLayout) -> Isometry:
    return Isometry(inputs, outputs, random_isometry_matrix(rng, outputs.total, inputs.total))


def random_density(
    rng: np.random.Generator, layout: RegisterLayout, env_dim: int | None = None
) -> DensityOperator:
    """Marginal of a random pure state on ``layout`` times an environment of size ``env_dim``."""
    env = layout.total if env_dim is None else env_dim
    m = complex_gaussian(rng, (layout.total, env))
    rho = m @ m.conj().T
    return DensityOperator(layout, rho / np.trace(rho).real)


def random_probs(rng: np.random.Generator, x_size: int, y_size: int, sparsity: float = 0.0) -> np.ndarray:
    """Dirichlet(1) table; with ``sparsity > 0`` some cells are zeroed (never all)."""
    p = rng.dirichlet(np.ones(x_size * y_size))
    if sparsity > 0:
        mask = rng.random(p.size) < sparsity
        if mask.all():
            mask[rng.integers(p.size)] = False
        p = np.where(mask, 0.0, p)
        p = p / p.sum()
    return p.reshape(x_size, y_size)
