"""Dense linear algebra over labeled multipartite registers.

Basis convention: a layout ``(L1, ..., Ln)`` with dimensions ``(d1, ..., dn)``
indexes the computational basis row-major with ``L1`` most significant, so
the flat index of ``|i1, ..., in>`` is ``((i1 * d2 + i2) * d3 + ...) + in``.
Kronecker products of per-register vectors follow the same convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import Settings, resolve
from .errors import DimCapError, InvalidStateError, IsometryError, LabelError

_COLUMN = "\x00col"


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered labeled registers defining a global Hilbert space."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.labels) != len(self.dims):
            raise LabelError("labels and dims differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise LabelError(f"duplicate labels in {self.labels}")
        if any(d < 1 for d in self.dims):
            raise LabelError(f"register dimensions must be >= 1, got {self.dims}")

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, int]]) -> "RegisterLayout":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def items(self) -> list[tuple[str, int]]:
        return list(zip(self.labels, self.dims))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown register {label!r}; layout has {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def sub(self, labels: Iterable[str]) -> "RegisterLayout":
        labels = tuple(labels)
        return RegisterLayout(labels, tuple(self.dim(l) for l in labels))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LabelError(f"label collision: {sorted(clash)}")
        return RegisterLayout(self.labels + other.labels, self.dims + other.dims)

    def relabel(self, mapping: Mapping[str, str]) -> "RegisterLayout":
        return RegisterLayout(tuple(mapping.get(l, l) for l in self.labels), self.dims)


def _as_complex(a) -> np.ndarray:
    return np.array(a, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class GlobalPureState:
    """Unit vector over a :class:`RegisterLayout`."""

    layout: RegisterLayout
    amplitudes: np.ndarray
    settings: Settings | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        amps = _as_complex(self.amplitudes).reshape(-1)
        if amps.size != self.layout.total:
            raise InvalidStateError(
                f"amplitude vector has length {amps.size}, layout needs {self.layout.total}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > resolve(self.settings).tol_norm:
            raise InvalidStateError(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, layout: RegisterLayout, indices: Sequence[int]) -> "GlobalPureState":
        amps = np.zeros(layout.total, dtype=np.complex128)
        amps[np.ravel_multi_index(tuple(indices), layout.dims) if layout.dims else 0] = 1.0
        return cls(layout, amps)

    @classmethod
    def single(cls, label: str, vector) -> "GlobalPureState":
        v = _as_complex(vector).reshape(-1)
        return cls(RegisterLayout((label,), (v.size,)), v)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Density matrix over a :class:`RegisterLayout`."""

    layout: RegisterLayout
    matrix: np.ndarray
    settings: Settings | None = field(default=None, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        n = self.layout.total
        m = _as_complex(self.matrix).reshape(n, n)
        if self.check:
            s = resolve(self.settings)
            if np.max(np.abs(m - m.conj().T), initial=0.0) > s.tol_herm:
                raise InvalidStateError("density operator is not Hermitian")
            tr = np.trace(m).real
            if abs(tr - 1.0) > s.tol_norm:
                raise InvalidStateError(f"density operator trace {tr!r} differs from 1")
            lo = np.linalg.eigvalsh(m)[0] if n else 0.0
            if lo < -s.tol_psd:
                raise InvalidStateError(f"density operator has eigenvalue {lo!r} < 0")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Linear map ``V`` with ``V^dagger V = I`` between labeled register sets.

    ``matrix`` has shape ``(outputs.total, inputs.total)``. A label may appear
    in both ``inputs`` and ``outputs``; an isometry with no inputs prepares a
    fresh state.
    """

    inputs: RegisterLayout
    outputs: RegisterLayout
    matrix: np.ndarray
    settings: Settings | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        m = _as_complex(self.matrix)
        shape = (self.outputs.total, self.inputs.total)
        if m.shape != shape:
            raise IsometryError(f"matrix shape {m.shape} does not match signature {shape}")
        gram = m.conj().T @ m
        err = np.max(np.abs(gram - np.eye(shape[1])), initial=0.0)
        if err > resolve(self.settings).tol_iso:
            raise IsometryError(f"not an isometry: max |V^dagger V - I| = {err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, layout: RegisterLayout) -> "Isometry":
        return cls(layout, layout, np.eye(layout.total))

    @classmethod
    def from_function(
        cls,
        inputs: RegisterLayout,
        outputs: RegisterLayout,
        fn,
    ) -> "Isometry":
        """Isometry mapping each input basis tuple to ``fn(*idx)``.

        ``fn`` returns either an output basis tuple or a mapping
        ``{output basis tuple: amplitude}``.
        """
        m = np.zeros((outputs.total, inputs.total), dtype=np.complex128)
        for col, idx in enumerate(np.ndindex(*inputs.dims)):
            image = fn(*idx)
            if not isinstance(image, Mapping):
                image = {tuple(image): 1.0}
            for out_idx, amp in image.items():
                row = np.ravel_multi_index(tuple(out_idx), outputs.dims) if outputs.dims else 0
                m[row, col] += amp
        return cls(inputs, outputs, m)

    def tensor(self, other: "Isometry") -> "Isometry":
        return Isometry(
            self.inputs.concat(other.inputs),
            self.outputs.concat(other.outputs),
            np.kron(self.matrix, other.matrix),
        )

    def relabel(self, mapping: Mapping[str, str]) -> "Isometry":
        return Isometry(self.inputs.relabel(mapping), self.outputs.relabel(mapping), self.matrix)


# ---------------------------------------------------------------------------
# raw tensor helpers (no validation; used by the public operations below)


def _apply_raw(
    amps: np.ndarray, layout: RegisterLayout, v: Isometry
) -> tuple[np.ndarray, RegisterLayout]:
    for label, d in v.inputs.items():
        if layout.dim(label) != d:
            raise IsometryError(
                f"register {label!r} has dimension {layout.dim(label)}, isometry expects {d}"
            )
    consumed = set(v.inputs.labels)
    rest = [l for l in layout.labels if l not in consumed]
    clash = set(v.outputs.labels) & set(rest)
    if clash:
        raise LabelError(f"isometry outputs collide with untouched registers: {sorted(clash)}")
    in_axes = [layout.index(l) for l in v.inputs.labels]
    rest_axes = [layout.index(l) for l in rest]
    t = amps.reshape(layout.dims).transpose(in_axes + rest_axes)
    t = v.matrix @ t.reshape(v.inputs.total, -1)
    # outputs take the place of the first consumed register; pure preparations go last
    if in_axes:
        pos = sum(1 for a in rest_axes if a < min(in_axes))
    else:
        pos = len(rest)
    out_layout = RegisterLayout(
        tuple(rest[:pos]) + v.outputs.labels + tuple(rest[pos:]),
        tuple(layout.dim(l) for l in rest[:pos]) + v.outputs.dims + tuple(layout.dim(l) for l in rest[pos:]),
    )
    t = t.reshape(v.outputs.dims + tuple(layout.dim(l) for l in rest))
    k = len(v.outputs)
    order = list(range(k, k + pos)) + list(range(k)) + list(range(k + pos, k + len(rest)))
    return t.transpose(order).reshape(-1), out_layout


def _split(amps: np.ndarray, layout: RegisterLayout, keep: Sequence[str]) -> np.ndarray:
    """Reshape amplitudes into a ``(dim keep, dim rest)`` matrix."""
    keep_axes = [layout.index(l) for l in keep]
    rest_axes = [i for i in range(len(layout)) if i not in keep_axes]
    dk = int(np.prod([layout.dims[i] for i in keep_axes], dtype=np.int64))
    t = amps.reshape(layout.dims).transpose(keep_axes + rest_axes)
    return t.reshape(dk, -1)


def permute(state: GlobalPureState, order: Sequence[str]) -> GlobalPureState:
    """Reorder the registers of ``state``."""
    if sorted(order) != sorted(state.layout.labels):
        raise LabelError(f"{order} is not a permutation of {state.layout.labels}")
    amps = _split(state.amplitudes, state.layout, order).reshape(-1)
    return GlobalPureState(state.layout.sub(order), amps, state.settings)


# ---------------------------------------------------------------------------
# public operations


def tensor(a: GlobalPureState, b: GlobalPureState) -> GlobalPureState:
    """Product state with ``a``'s registers first."""
    return GlobalPureState(a.layout.concat(b.layout), np.kron(a.amplitudes, b.amplitudes), a.settings)


def partial_trace(
    state: GlobalPureState | DensityOperator,
    keep: Iterable[str],
    settings: Settings | None = None,
) -> DensityOperator:
    """Reduced density operator on ``keep``, in the layout's relative order."""
    s = resolve(settings)
    keep = set(keep)
    if not keep:
        raise LabelError("partial_trace needs at least one register to keep")
    for l in keep:
        state.layout.index(l)
    order = [l for l in state.layout.labels if l in keep]
    sub = state.layout.sub(order)
    if sub.total > s.dim_cap:
        raise DimCapError(f"reduced state side {sub.total} exceeds dim_cap={s.dim_cap}")
    if isinstance(state, GlobalPureState):
        m = _split(state.amplitudes, state.layout, order)
        rho = m @ m.conj().T
    else:
        lay = state.layout
        rest = [l for l in lay.labels if l not in keep]
        n = len(lay)
        keep_axes = [lay.index(l) for l in order]
        rest_axes = [lay.index(l) for l in rest]
        dr = lay.sub(rest).total
        t = state.matrix.reshape(lay.dims + lay.dims)
        t = t.transpose(keep_axes + rest_axes + [n + a for a in keep_axes] + [n + a for a in rest_axes])
        t = t.reshape(sub.total, dr, sub.total, dr)
        rho = np.einsum("ijkj->ik", t)
    return DensityOperator(sub, rho, settings, check=False)


def eig_hermitian(
    m, settings: Settings | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and matching eigenvectors (columns).

    Each eigenvector is rotated so its first component with modulus above
    1e-12 is real and positive.
    """
    s = resolve(settings)
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > s.tol_herm:
        raise InvalidStateError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-12)
        if lead.size:
            ph = col[lead[0]] / abs(col[lead[0]])
            vecs[:, k] = col / ph
    return vals, vecs


def clamp_spectrum(vals: np.ndarray, settings: Settings | None = None) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol_psd, 0)``; reject anything more negative."""
    s = resolve(settings)
    vals = np.asarray(vals, dtype=float)
    if vals.size and vals.min() < -s.tol_psd:
        raise InvalidStateError(f"eigenvalue {vals.min()!r} below -tol_psd")
    return np.where(vals < 0, 0.0, vals)


def purify(rho: DensityOperator, r_label: str, settings: Settings | None = None) -> GlobalPureState:
    """Canonical purification ``sum_k sqrt(l_k) |e_k> |k>_R``.

    Eigenpairs come from :func:`eig_hermitian` (descending, sign-fixed), so the
    result is deterministic.
    """
    if r_label in rho.layout:
        raise LabelError(f"purifying label {r_label!r} already in layout")
    DensityOperator(rho.layout, rho.matrix, settings)  # validate
    vals, vecs = eig_hermitian(rho.matrix, settings)
    vals = clamp_spectrum(vals, settings)
    n = rho.layout.total
    amps = vecs * np.sqrt(vals)[None, :]
    layout = rho.layout.concat(RegisterLayout((r_label,), (n,)))
    return GlobalPureState(layout, amps.reshape(-1), settings)


def apply_isometry(
    state: GlobalPureState, v: Isometry, settings: Settings | None = None
) -> GlobalPureState:
    """Apply ``v`` to its registers inside ``state``, identity elsewhere.

    The output registers replace the consumed ones at the position of the
    first consumed register (preparations are appended).
    """
    amps, layout = _apply_raw(state.amplitudes, state.layout, v)
    return GlobalPureState(layout, amps, settings if settings is not None else state.settings)


def compose(first: Isometry, second: Isometry) -> Isometry:
    """The isometry ``second`` after ``first``.

    ``second`` may consume registers that ``first`` does not touch; those
    become extra inputs of the result.
    """
    extra = [l for l in second.inputs.labels if l not in first.outputs]
    for l in extra:
        if l in first.inputs:
            raise LabelError(f"register {l!r} consumed by the first isometry and reused by the second")
    extra_layout = second.inputs.sub(extra)
    inputs = first.inputs.concat(extra_layout)
    din = inputs.total
    layout = inputs.concat(RegisterLayout((_COLUMN,), (din,)))
    amps = np.eye(din, dtype=np.complex128).reshape(-1)
    amps, layout = _apply_raw(amps, layout, first)
    amps, layout = _apply_raw(amps, layout, second)
    out_labels = [l for l in layout.labels if l != _COLUMN]
    outputs = layout.sub(out_labels)
    m = _split(amps, layout, out_labels)
    return Isometry(inputs, outputs, m)


def trace_distance(
    r1: DensityOperator, r2: DensityOperator, settings: Settings | None = None
) -> float:
    """``Tr |r1 - r2|``, in ``[0, 2]``."""
    if r1.layout != r2.layout:
        raise LabelError("trace_distance needs identical layouts")
    vals = np.linalg.eigvalsh(r1.matrix - r2.matrix)
    return float(np.sum(np.abs(vals)))


def project(
    state: GlobalPureState, assignment: Mapping[str, int]
) -> tuple[float, GlobalPureState | None]:
    """Condition ``state`` on basis values of some registers.

    Returns the outcome probability and the normalized post-selected state on
    the remaining registers (``None`` when the probability is zero).
    """
    lay = state.layout
    t = state.tensor_view()
    index = tuple(assignment[l] if l in assignment else slice(None) for l in lay.labels)
    for l in assignment:
        lay.index(l)
    sliced = np.ascontiguousarray(t[index]).reshape(-1)
    rest = lay.sub([l for l in lay.labels if l not in assignment])
    p = float(np.vdot(sliced, sliced).real)
    if p <= 0.0:
        return 0.0, None
    return p, GlobalPureState(rest, sliced / np.sqrt(p), state.settings)


def basis_probabilities(state: GlobalPureState, labels: Sequence[str]) -> np.ndarray:
    """Joint computational-basis outcome distribution of ``labels``.

    The returned array has one axis per label, in the given order.
    """
    lay = state.layout
    axes = [lay.index(l) for l in labels]
    p = np.abs(state.tensor_view()) ** 2
    others = tuple(i for i in range(len(lay)) if i not in axes)
    p = p.sum(axis=others)
    remaining = [i for i in range(len(lay)) if i in axes]
    return p.transpose([remaining.index(a) for a in axes])
