"""Execution of interactive isometry protocols on purified classical inputs.

A protocol with ``r`` messages is a sequence of ``r + 1`` steps. Step ``i``
(1-based) is applied by Alice when ``i`` is odd and by Bob when it is even;
it consumes registers the sender holds (including the message just
received), emits new registers, and hands the ``message`` registers to the
other party. The last step sends nothing.

Registers named ``A_in``/``B_in`` carry the inputs and ``R1``/``R2`` the two
coherent copies of ``(x, y)`` that purify the input; protocols may not use
those names for anything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .config import Settings, resolve
from .errors import DimCapError, DistributionError, InputError, SignatureError
from .linalg import (
    GlobalPureState,
    Isometry,
    RegisterLayout,
    apply_isometry,
    basis_probabilities,
    tensor,
)
from .measures import cqmi

ALICE, BOB = "A", "B"
A_IN, B_IN = "A_in", "B_in"
R1, R2 = "R1", "R2"
REFERENCE = (R1, R2)
RESERVED = frozenset({A_IN, B_IN, R1, R2})


def other(party: str) -> str:
    return BOB if party == ALICE else ALICE


def sender_of(step: int) -> str:
    return ALICE if step % 2 == 1 else BOB


# ---------------------------------------------------------------------------
# inputs and tasks


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Probability table ``mu[x, y]`` over ``X x Y`` (alphabets are indices)."""

    probs: np.ndarray
    settings: Settings | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or 0 in p.shape:
            raise DistributionError(f"probability table must be 2-D and nonempty, got shape {p.shape}")
        tol = resolve(self.settings).tol_norm
        if p.min() < -tol:
            raise DistributionError("negative probability")
        if abs(p.sum() - 1.0) > tol:
            raise DistributionError(f"probabilities sum to {p.sum()!r}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def x_size(self) -> int:
        return self.probs.shape[0]

    @property
    def y_size(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, x_size: int, y_size: int) -> "InputDistribution":
        return cls(np.full((x_size, y_size), 1.0 / (x_size * y_size)))

    @classmethod
    def point(cls, x_size: int, y_size: int, x: int, y: int) -> "InputDistribution":
        p = np.zeros((x_size, y_size))
        p[x, y] = 1.0
        return cls(p)

    @classmethod
    def from_flat(cls, values: Sequence, x_size: int = 2, y_size: int = 2) -> "InputDistribution":
        """Row-major flat list; entries may be strings such as ``"1/3"``."""
        vals = [float(Fraction(str(v).strip())) for v in values]
        if len(vals) != x_size * y_size:
            raise DistributionError(f"expected {x_size * y_size} probabilities, got {len(vals)}")
        return cls(np.array(vals).reshape(x_size, y_size))

    def product(self, other: "InputDistribution") -> "InputDistribution":
        """``mu1 (x) mu2`` on ``(X1 X2) x (Y1 Y2)``; ``x = x1 * |X2| + x2``."""
        p = np.einsum("ab,cd->acbd", self.probs, other.probs)
        return InputDistribution(p.reshape(self.x_size * other.x_size, self.y_size * other.y_size))

    def marginals(self, x_sizes: tuple[int, int], y_sizes: tuple[int, int]):
        """Split a joint table over ``(X1 X2) x (Y1 Y2)`` into its two coordinate marginals."""
        t = self.probs.reshape(x_sizes[0], x_sizes[1], y_sizes[0], y_sizes[1])
        return (
            InputDistribution(t.sum(axis=(1, 3))),
            InputDistribution(t.sum(axis=(0, 2))),
        )

    def mix(self, p: float, other: "InputDistribution") -> "InputDistribution":
        return InputDistribution(p * self.probs + (1 - p) * other.probs)


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """Relation ``T`` as a boolean table ``allowed[x, y, z_A, z_B]``."""

    allowed: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        a = np.array(self.allowed, dtype=bool)
        if a.ndim != 4:
            raise InputError("relation table must have axes (x, y, z_A, z_B)")
        a.setflags(write=False)
        object.__setattr__(self, "allowed", a)

    @classmethod
    def from_function(cls, values, name: str = "", z_size: int | None = None) -> "TaskSpec":
        """Both parties must output ``f(x, y)``."""
        f = np.asarray(values, dtype=int)
        z = int(f.max()) + 1 if z_size is None else z_size
        a = np.zeros(f.shape + (z, z), dtype=bool)
        for (x, y), v in np.ndenumerate(f):
            a[x, y, v, v] = True
        return cls(a, name)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.allowed.shape


def and_task() -> TaskSpec:
    return TaskSpec.from_function([[0, 0], [0, 1]], "AND")


def disj_values(n: int) -> np.ndarray:
    """``DISJ_n[x, y] = 1`` iff no coordinate has ``x_i = y_i = 1``; bit 1 is most significant."""
    idx = np.arange(2**n)
    return ((idx[:, None] & idx[None, :]) == 0).astype(int)


def disj_task(n: int) -> TaskSpec:
    return TaskSpec.from_function(disj_values(n), f"DISJ_{n}", z_size=2)


# ---------------------------------------------------------------------------
# protocols


@dataclass(frozen=True, eq=False)
class Step:
    sender: str
    isometry: Isometry
    message: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "message", tuple(self.message))


@dataclass(frozen=True)
class Roles:
    """Who holds what right after a step."""

    alice: tuple[str, ...]
    bob: tuple[str, ...]
    message: tuple[str, ...]

    def of(self, party: str) -> tuple[str, ...]:
        return self.alice if party == ALICE else self.bob


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """An ``r``-message protocol: pre-shared state plus ``r + 1`` isometry steps.

    ``owners`` maps each prestate register to ``"A"`` or ``"B"``; ``outputs``
    maps each party to the registers holding its output (the joint basis
    index, row-major, is the output symbol).
    """

    x_size: int
    y_size: int
    steps: tuple[Step, ...]
    prestate: GlobalPureState | None = None
    owners: Mapping[str, str] = field(default_factory=dict)
    outputs: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: {ALICE: (), BOB: ()})
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "owners", dict(self.owners))
        object.__setattr__(
            self, "outputs", {ALICE: tuple(self.outputs.get(ALICE, ())), BOB: tuple(self.outputs.get(BOB, ()))}
        )
        roles, dims = self._trace()
        object.__setattr__(self, "_roles", roles)
        object.__setattr__(self, "_dims", dims)

    @property
    def rounds(self) -> int:
        return len(self.steps) - 1

    @property
    def roles(self) -> tuple[Roles, ...]:
        return self._roles

    def dims(self) -> dict[str, int]:
        """Dimension of every register that ever exists (last definition wins)."""
        return dict(self._dims)

    def message_dims(self) -> list[int]:
        out = []
        for st in self.steps[:-1]:
            d = 1
            for l in st.message:
                d *= st.isometry.outputs.dim(l)
            out.append(d)
        return out

    def output_dims(self, party: str) -> int:
        d = 1
        for l in self.outputs[party]:
            d *= self._final_dims[l]
        return d

    def max_dimension(self) -> int:
        """Largest product of register dimensions (inputs included, reference excluded) over steps."""
        return max(self._sizes)

    def _trace(self):
        if len(self.steps) < 2:
            raise SignatureError("a protocol needs at least one message and a final step")
        dims: dict[str, int] = {A_IN: self.x_size, B_IN: self.y_size}
        hold = {ALICE: [A_IN], BOB: [B_IN]}
        if self.prestate is not None:
            for l, d in self.prestate.layout.items():
                if l in RESERVED:
                    raise SignatureError(f"prestate uses reserved label {l!r}")
                party = self.owners.get(l)
                if party not in (ALICE, BOB):
                    raise SignatureError(f"prestate register {l!r} has no owner")
                hold[party].append(l)
                dims[l] = d
        live = dict(dims)
        transit: list[str] = []
        roles = []
        sizes = [int(np.prod(list(live.values())))]
        last = len(self.steps)
        for i, st in enumerate(self.steps, start=1):
            p = sender_of(i)
            if st.sender != p:
                raise SignatureError(f"step {i} must be applied by {p}, spec says {st.sender}")
            avail = hold[p] + transit
            v = st.isometry
            for l, d in v.inputs.items():
                if l not in avail:
                    raise SignatureError(f"step {i}: {p} does not hold register {l!r}")
                if live[l] != d:
                    raise SignatureError(f"step {i}: register {l!r} has dim {live[l]}, isometry expects {d}")
            consumed = set(v.inputs.labels)
            remaining = [l for l in avail if l not in consumed]
            busy = set(remaining) | set(hold[other(p)])
            for l in v.outputs.labels:
                if l in busy:
                    raise SignatureError(f"step {i}: output register {l!r} already exists")
                if l in RESERVED and l not in consumed:
                    raise SignatureError(f"step {i}: output uses reserved label {l!r}")
            for l in st.message:
                if l not in v.outputs:
                    raise SignatureError(f"step {i}: message register {l!r} is not an output")
            if i == last and st.message:
                raise SignatureError("the final step must not send a message")
            for l in consumed:
                del live[l]
            for l, d in v.outputs.items():
                live[l] = d
                dims[l] = d
            hold[p] = remaining + [l for l in v.outputs.labels if l not in st.message]
            transit = list(st.message)
            roles.append(Roles(tuple(hold[ALICE]), tuple(hold[BOB]), tuple(st.message)))
            sizes.append(int(np.prod(list(live.values()))))
        for party in (ALICE, BOB):
            for l in self.outputs[party]:
                if l not in hold[party]:
                    raise SignatureError(f"output register {l!r} is not held by {party} at the end")
        object.__setattr__(self, "_final_dims", dict(live))
        object.__setattr__(self, "_sizes", sizes)
        return tuple(roles), dims


def embed_input(mu: InputDistribution) -> GlobalPureState:
    """``sum sqrt(mu(x,y)) |x>_{A_in} |y>_{B_in} |xy>_{R1} |xy>_{R2}``."""
    nx, ny = mu.x_size, mu.y_size
    layout = RegisterLayout((A_IN, B_IN, R1, R2), (nx, ny, nx * ny, nx * ny))
    t = np.zeros((nx, ny, nx * ny, nx * ny), dtype=np.complex128)
    for x in range(nx):
        for y in range(ny):
            t[x, y, x * ny + y, x * ny + y] = math.sqrt(mu.probs[x, y])
    return GlobalPureState(layout, t.reshape(-1))


@dataclass(frozen=True)
class Snapshot:
    step: int
    sender: str
    state: GlobalPureState
    roles: Roles


@dataclass(frozen=True)
class Transcript:
    """Global pure state after each of the ``r + 1`` steps."""

    protocol: ProtocolSpec
    distribution: InputDistribution
    snapshots: tuple[Snapshot, ...]
    reference: tuple[str, ...] = REFERENCE

    @property
    def final(self) -> GlobalPureState:
        return self.snapshots[-1].state


def _check_size(p: ProtocolSpec, mu: InputDistribution, s: Settings) -> None:
    # the global vector may exceed dim_cap, but every bipartition must keep one side below it
    ref = (mu.x_size * mu.y_size) ** 2
    total = p.max_dimension() * ref
    if total > s.dim_cap**2:
        raise DimCapError(
            f"global state dimension {total} exceeds dim_cap^2={s.dim_cap ** 2}"
        )


def run(p: ProtocolSpec, mu: InputDistribution, settings: Settings | None = None) -> Transcript:
    """Simulate ``p`` on the purified input ``mu``."""
    s = resolve(settings)
    if (mu.x_size, mu.y_size) != (p.x_size, p.y_size):
        raise InputError(
            f"distribution is over {mu.x_size}x{mu.y_size}, protocol expects {p.x_size}x{p.y_size}"
        )
    _check_size(p, mu, s)
    state = embed_input(mu)
    if p.prestate is not None:
        state = tensor(state, p.prestate)
    snaps = []
    for i, (st, roles) in enumerate(zip(p.steps, p.roles), start=1):
        state = apply_isometry(state, st.isometry, s)
        snaps.append(Snapshot(i, st.sender, state, roles))
    return Transcript(p, mu, tuple(snaps))


# ---------------------------------------------------------------------------
# costs and errors


@dataclass(frozen=True)
class RoundTerm:
    round: int
    sender: str
    contribution: float


@dataclass(frozen=True, eq=False)
class QicReport:
    """Per-message information terms, totals, and (optionally) error statistics.

    ``output_distribution`` has axes ``(x, y, z_A, z_B)``.
    """

    per_round: tuple[RoundTerm, ...]
    qic_total: float
    qcc: float
    avg_error: float | None = None
    output_distribution: np.ndarray | None = None

    def partial_total(self, upto: int) -> float:
        """Sum of the contributions of messages ``1..upto``."""
        return float(sum(t.contribution for t in self.per_round if t.round <= upto))

    def violations(self, tol: float = 1e-8) -> list[str]:
        bad = []
        if abs(self.qic_total - sum(t.contribution for t in self.per_round)) > 1e-9:
            bad.append("qic_total differs from the sum of per-round terms")
        if self.qic_total < -tol:
            bad.append(f"qic_total {self.qic_total} is negative")
        if self.qic_total > self.qcc + tol:
            bad.append(f"qic_total {self.qic_total} exceeds qcc {self.qcc}")
        return bad


def qcc(p: ProtocolSpec) -> float:
    """Sum of ``log2 dim`` over the messages; the final step sends nothing."""
    return float(sum(math.log2(d) for d in p.message_dims()))


def information_terms(t: Transcript, settings: Settings | None = None) -> list[RoundTerm]:
    """``1/2 I(C_i ; R | receiver)`` for every message ``i``.

    The receiver's conditioning system is everything that party holds at
    that moment: memory, untouched input and its share of the prestate.
    """
    terms = []
    for snap in t.snapshots[:-1]:
        msg = snap.roles.message
        if not msg:
            terms.append(RoundTerm(snap.step, snap.sender, 0.0))
            continue
        receiver = snap.roles.of(other(snap.sender))
        val = 0.5 * cqmi(snap.state, msg, t.reference, receiver, settings)
        terms.append(RoundTerm(snap.step, snap.sender, val))
    return terms


def output_table(t: Transcript) -> np.ndarray:
    """Joint law of ``(x, y, z_A, z_B)`` read off the final state."""
    p = t.protocol
    out_a, out_b = p.outputs[ALICE], p.outputs[BOB]
    probs = basis_probabilities(t.final, (R1,) + out_a + out_b)
    return probs.reshape(p.x_size, p.y_size, p.output_dims(ALICE), p.output_dims(BOB))


def _error_from_table(table: np.ndarray, task: TaskSpec) -> float:
    if table.shape != task.shape:
        raise InputError(f"task relation has shape {task.shape}, protocol outputs have {table.shape}")
    return float(np.clip(table[~task.allowed].sum(), 0.0, 1.0))


def qic(
    p: ProtocolSpec,
    mu: InputDistribution,
    task: TaskSpec | None = None,
    settings: Settings | None = None,
) -> QicReport:
    """Information cost of ``p`` on ``mu``, with error statistics when ``task`` is given."""
    t = run(p, mu, settings)
    terms = information_terms(t, settings)
    total = float(sum(x.contribution for x in terms))
    err = table = None
    if task is not None:
        table = output_table(t)
        err = _error_from_table(table, task)
    return QicReport(tuple(terms), total, qcc(p), err, table)


def avg_error(
    p: ProtocolSpec, mu: InputDistribution, task: TaskSpec, settings: Settings | None = None
) -> float:
    """``Pr[(x, y, z_A, z_B) not in T]`` with ``x, y`` read from ``R1``."""
    return _error_from_table(output_table(run(p, mu, settings)), task)


def error_by_input(p: ProtocolSpec, task: TaskSpec, settings: Settings | None = None) -> np.ndarray:
    """Error probability on each atomic input ``(x, y)``.

    Branches with different ``(x, y)`` are orthogonal in ``R1`` and evolve
    independently, so one run on the uniform prior yields every atomic error.
    """
    mu = InputDistribution.uniform(p.x_size, p.y_size)
    table = output_table(run(p, mu, settings))
    if table.shape != task.shape:
        raise InputError(f"task relation has shape {task.shape}, protocol outputs have {table.shape}")
    bad = np.where(task.allowed, 0.0, table).sum(axis=(2, 3))
    return np.clip(bad / mu.probs, 0.0, 1.0)


def worst_case_error(p: ProtocolSpec, task: TaskSpec, settings: Settings | None = None) -> float:
    """Maximum average error over point-mass inputs."""
    return float(error_by_input(p, task, settings).max())


# ---------------------------------------------------------------------------
# prior search


def simplex_grid(cells: int, steps: int) -> Iterable[tuple[int, ...]]:
    """Compositions of ``steps`` into ``cells`` parts, lexicographic order."""
    if cells == 1:
        yield (steps,)
        return
    for first in range(steps + 1):
        for rest in simplex_grid(cells - 1, steps - first):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class PriorSearch:
    value: float
    argmax: InputDistribution
    evaluated: int


def qic_sup_over_prior(
    p: ProtocolSpec,
    grid_step: float,
    constraint: Callable[[InputDistribution], bool] | None = None,
    settings: Settings | None = None,
) -> PriorSearch:
    """Exhaustive grid maximum of ``QIC(p, mu)`` over priors satisfying ``constraint``.

    The grid is ``{k / m}`` with ``m = 1 / grid_step`` (must be an integer);
    the first maximizer in lexicographic scan order is returned.
    """
    if not 0 < grid_step <= 0.5:
        raise InputError("grid_step must lie in (0, 1/2]")
    m = round(1 / grid_step)
    if abs(m * grid_step - 1) > 1e-9:
        raise InputError(f"1/grid_step = {1 / grid_step} is not an integer")
    best: tuple[float, InputDistribution] | None = None
    count = 0
    for comp in simplex_grid(p.x_size * p.y_size, m):
        mu = InputDistribution(np.array(comp, dtype=float).reshape(p.x_size, p.y_size) / m)
        if constraint is not None and not constraint(mu):
            continue
        count += 1
        val = qic(p, mu, settings=settings).qic_total
        if best is None or val > best[0]:
            best = (val, mu)
    if best is None:
        raise InputError("no grid point satisfies the constraint")
    return PriorSearch(best[0], best[1], count)
