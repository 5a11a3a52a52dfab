"""Named protocol constructions.

The centerpiece is the single-qubit ping-pong protocol for AND: Alice
reflects a qubit ``C`` about ``cos(theta)|0> + sin(theta)|1>`` when
``x = 1``, Bob flips the sign of ``|1>`` when ``y = 1``, and after ``4r - 1``
messages the qubit sits at ``|1>`` (up to sign) exactly when ``x = y = 1``.
Bob then copies the basis value of ``C`` into his output ``O_B`` and sends a
second copy ``O_A`` to Alice as message ``4r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import (
    A_IN,
    ALICE,
    B_IN,
    BOB,
    InputDistribution,
    ProtocolSpec,
    Step,
    TaskSpec,
    Transcript,
    sender_of,
)
from .errors import InputError
from .linalg import GlobalPureState, Isometry, RegisterLayout, project
from .measures import binary_entropy, entropy
from .sampling import random_isometry, random_state

QUBIT = 2


# ---------------------------------------------------------------------------
# the AND protocol


@dataclass(frozen=True)
class AndProtocolParams:
    """``r`` sets the message count ``4r`` and the angle ``theta = pi / (8r)``."""

    r: int
    theta: float = field(init=False)

    def __post_init__(self) -> None:
        if int(self.r) != self.r or self.r < 1:
            raise InputError(f"r must be a positive integer, got {self.r!r}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "theta", math.pi / (8 * self.r))

    @property
    def messages(self) -> int:
        return 4 * self.r


def reflection(theta: float) -> np.ndarray:
    """``U_v`` for ``v = cos(theta)|0> + sin(theta)|1>``: maps angle ``phi`` to ``2 theta - phi``."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]])


PAULI_Z = np.diag([1.0, -1.0])


def _controlled(control: str, target: str, u: np.ndarray) -> Isometry:
    lay = RegisterLayout((control, target), (2, 2))
    m = np.zeros((4, 4), dtype=np.complex128)
    m[:2, :2] = np.eye(2)
    m[2:, 2:] = u
    return Isometry(lay, lay, m)


def _as_params(params: AndProtocolParams | int) -> AndProtocolParams:
    return params if isinstance(params, AndProtocolParams) else AndProtocolParams(params)


def build_and_protocol(params: AndProtocolParams | int) -> ProtocolSpec:
    """The ``4r``-message AND protocol on ``{0,1} x {0,1}``.

    Registers: ``C`` (the travelling qubit), ``O_B`` (Bob's answer) and
    ``O_A`` (the copy sent to Alice). The inputs stay in ``A_in``/``B_in``
    and act only as controls.
    """
    prm = _as_params(params)
    u = reflection(prm.theta)
    n = prm.messages
    steps = []
    # message 1: Alice prepares C = U_v^x |0>
    prep = np.zeros((4, 2), dtype=np.complex128)
    prep[0:2, 0] = [1.0, 0.0]
    prep[2:4, 1] = u[:, 0]
    steps.append(
        Step(ALICE, Isometry(RegisterLayout((A_IN,), (2,)), RegisterLayout((A_IN, "C"), (2, 2)), prep), ("C",))
    )
    for i in range(2, n):
        if sender_of(i) == ALICE:
            steps.append(Step(ALICE, _controlled(A_IN, "C", u), ("C",)))
        else:
            steps.append(Step(BOB, _controlled(B_IN, "C", PAULI_Z), ("C",)))

    # message 4r: Bob's last Z, then coherent copies of C's basis value
    def answer(y, c):
        return {(y, c, c, c): -1.0 if y and c else 1.0}

    steps.append(
        Step(
            BOB,
            Isometry.from_function(
                RegisterLayout((B_IN, "C"), (2, 2)),
                RegisterLayout((B_IN, "C", "O_B", "O_A"), (2, 2, 2, 2)),
                answer,
            ),
            ("O_A",),
        )
    )
    steps.append(Step(ALICE, Isometry(RegisterLayout((), ()), RegisterLayout((), ()), np.ones((1, 1)))))
    return ProtocolSpec(2, 2, steps, None, {}, {ALICE: ("O_A",), BOB: ("O_B",)}, f"and(r={prm.r})")


def mu_star() -> InputDistribution:
    """``(1/3, 1/3, 1/3, 0)`` on ``(00, 01, 10, 11)``."""
    return InputDistribution(np.array([[1, 1], [1, 0]]) / 3.0)


def mu_w(w: float) -> InputDistribution:
    """``((1-w)/3, (1-w)/3, (1-w)/3, w)``."""
    if not 0.0 <= w <= 1.0:
        raise InputError(f"w must lie in [0, 1], got {w!r}")
    a = (1.0 - w) / 3.0
    return InputDistribution(np.array([[a, a], [a, w]]))


def and_angle(params: AndProtocolParams | int, x: int, y: int, i: int) -> float:
    """Angle of ``C`` after message ``i`` (``1 <= i <= 4r - 1``) on input ``(x, y)``.

    Bob's sign flip in the answer step gives angle ``-4r theta`` after message ``4r``
    for ``x = y = 1``.
    """
    prm = _as_params(params)
    if not 1 <= i <= prm.messages:
        raise InputError(f"message index {i} outside 1..{prm.messages}")
    phi = 0.0
    for k in range(1, i + 1):
        if sender_of(k) == ALICE:
            phi = 2 * prm.theta - phi if x else phi
        elif y:
            phi = -phi
    return phi


def c_vector(t: Transcript, i: int) -> np.ndarray:
    """Amplitudes of ``C`` after message ``i`` on a point-mass input.

    Every other register is then in a definite basis state (inputs, reference
    and, after the answer, the classical copies), so ``C``'s amplitudes are
    read from the slice through the heaviest basis configuration of the rest,
    sign included.
    """
    st = t.snapshots[i - 1].state
    lay = st.layout
    ax = lay.index("C")
    tv = np.moveaxis(st.tensor_view(), ax, 0).reshape(2, -1)
    col = int(np.argmax(np.linalg.norm(tv, axis=0)))
    return tv[:, col]


def conditional_entropy_of(
    t: Transcript, i: int, register: str, value: int, target: Sequence[str] = ("C",)
) -> float:
    """``H(target | register = value)`` on the snapshot after message ``i``."""
    p, post = project(t.snapshots[i - 1].state, {register: value})
    if post is None:
        return 0.0
    return entropy(post, list(target))


def and_round_entropy(
    i: int, params: AndProtocolParams | int, w: float = 0.0, branch: int = 1
) -> float:
    """Closed-form ``H(C | Y = branch)`` after odd message ``i`` under ``mu_w``.

    ``branch = 1``: ``C`` is ``|0>`` with weight ``(1-w)/(1+2w)`` and at angle
    ``(i+1) theta`` with weight ``3w/(1+2w)``; the two eigenvalues are
    ``(1 +- sqrt(1 - 12 w (1-w) sin^2((i+1) theta) / (1+2w)^2)) / 2``.

    ``branch = 0``: an equal mixture of ``|0>`` and ``C``'s state on ``(1, 0)``,
    giving ``H(sin^2 theta)`` for ``i = 1 mod 4`` and ``0`` for ``i = 3 mod 4``
    (independent of ``w``).
    """
    prm = _as_params(params)
    if i % 2 != 1:
        raise InputError(f"closed forms cover odd messages only, got i={i}")
    if not 1 <= i <= prm.messages - 1:
        raise InputError(f"message index {i} outside 1..{prm.messages - 1}")
    if not 0.0 <= w <= 0.5:
        raise InputError(f"w must lie in [0, 1/2], got {w!r}")
    if branch == 0:
        return binary_entropy(math.sin(prm.theta) ** 2) if i % 4 == 1 else 0.0
    if branch != 1:
        raise InputError("branch must be 0 or 1")
    s2 = math.sin((i + 1) * prm.theta) ** 2
    disc = 1.0 - 12.0 * w * (1.0 - w) * s2 / (1.0 + 2.0 * w) ** 2
    lam = (1.0 - math.sqrt(max(disc, 0.0))) / 2.0
    return binary_entropy(min(max(lam, 0.0), 1.0))


def and_qic_closed_form(params: AndProtocolParams | int) -> float:
    """``QIC`` under ``mu_star``: ``(2r/3) H(sin^2(pi / 8r))``.

    Every message ``i < 4r`` contributes ``(1/3) H(C | Y = 0)``, nonzero for
    ``i = 1, 2 mod 4`` only; the answer carries no information under ``mu_star``.
    """
    prm = _as_params(params)
    return 2.0 * prm.r / 3.0 * binary_entropy(math.sin(prm.theta) ** 2)


# ---------------------------------------------------------------------------
# baselines


def _function_of(task: TaskSpec) -> np.ndarray:
    nx, ny, za, zb = task.shape
    if za != zb:
        raise InputError("classical exchange needs equal output alphabets")
    f = np.zeros((nx, ny), dtype=int)
    for x in range(nx):
        for y in range(ny):
            ok = [z for z in range(za) if task.allowed[x, y, z, z]]
            if not ok:
                raise InputError(f"no common answer allowed on input ({x}, {y})")
            f[x, y] = ok[0]
    return f


def build_classical_exchange(task: TaskSpec) -> ProtocolSpec:
    """Alice sends a coherent copy of ``x``; Bob answers ``f(x, y)`` and sends a copy back."""
    f = _function_of(task)
    nx, ny = f.shape
    z = task.shape[2]
    send_x = Isometry.from_function(
        RegisterLayout((A_IN,), (nx,)), RegisterLayout((A_IN, "C1"), (nx, nx)), lambda x: (x, x)
    )
    answer = Isometry.from_function(
        RegisterLayout((B_IN, "C1"), (ny, nx)),
        RegisterLayout((B_IN, "C1", "O_B", "C2"), (ny, nx, z, z)),
        lambda y, x: (y, x, f[x, y], f[x, y]),
    )
    steps = [
        Step(ALICE, send_x, ("C1",)),
        Step(BOB, answer, ("C2",)),
        Step(ALICE, Isometry(RegisterLayout((), ()), RegisterLayout((), ()), np.ones((1, 1)))),
    ]
    return ProtocolSpec(nx, ny, steps, None, {}, {ALICE: ("C2",), BOB: ("O_B",)}, f"classical({task.name})")


def _fresh(label: str, d: int) -> Isometry:
    v = np.zeros((d, 1))
    v[0, 0] = 1.0
    return Isometry(RegisterLayout((), ()), RegisterLayout((label,), (d,)), v)


def build_dummy(rounds: int, dims: int | Sequence[int] = 2, x_size: int = 2, y_size: int = 2) -> ProtocolSpec:
    """Exchange freshly prepared ``|0>`` registers ``D1, D2, ...``; no outputs."""
    if rounds < 1:
        raise InputError("rounds must be at least 1")
    ds = [dims] * rounds if isinstance(dims, int) else list(dims)
    if len(ds) != rounds:
        raise InputError("need one dimension per round")
    steps = [Step(sender_of(i), _fresh(f"D{i}", d), (f"D{i}",)) for i, d in enumerate(ds, start=1)]
    steps.append(Step(sender_of(rounds + 1), Isometry(RegisterLayout((), ()), RegisterLayout((), ()), np.ones((1, 1)))))
    return ProtocolSpec(x_size, y_size, steps, name=f"dummy({rounds})")


def build_constant_output(value: int = 0, z_size: int = 2, x_size: int = 2, y_size: int = 2) -> ProtocolSpec:
    """Both parties output ``value``; one empty message."""
    out = np.zeros((z_size, 1))
    out[value, 0] = 1.0
    empty = RegisterLayout((), ())
    steps = [
        Step(ALICE, Isometry(empty, RegisterLayout(("O_A",), (z_size,)), out)),
        Step(BOB, Isometry(empty, RegisterLayout(("O_B",), (z_size,)), out)),
    ]
    return ProtocolSpec(x_size, y_size, steps, None, {}, {ALICE: ("O_A",), BOB: ("O_B",)}, f"constant({value})")


def build_random_output(x_size: int = 2, y_size: int = 2) -> ProtocolSpec:
    """Both parties output the same uniformly random bit, taken from a shared EPR pair."""
    epr = GlobalPureState(RegisterLayout(("T_A", "T_B"), (2, 2)), np.array([1, 0, 0, 1]) / math.sqrt(2))
    empty = RegisterLayout((), ())
    steps = [
        Step(ALICE, Isometry(empty, empty, np.ones((1, 1)))),
        Step(BOB, Isometry(empty, empty, np.ones((1, 1)))),
    ]
    return ProtocolSpec(
        x_size, y_size, steps, epr, {"T_A": ALICE, "T_B": BOB}, {ALICE: ("T_A",), BOB: ("T_B",)}, "random-bit"
    )


# ---------------------------------------------------------------------------
# random protocols


def random_protocol(
    rng: np.random.Generator,
    x_size: int = 2,
    y_size: int = 2,
    rounds: int = 1,
    msg_dim: int = 2,
    ent_dim: int = 1,
    out_dim: int = 2,
) -> ProtocolSpec:
    """Haar-random isometries with the smallest memories that fit.

    Each step maps all of the sender's holdings (plus the incoming message)
    into one memory register and one message register; at a party's last
    step an output register of size ``out_dim`` is split off as well. With
    ``ent_dim > 1`` the parties start from a random entangled state on
    ``T_A, T_B``.
    """
    pre = None
    owners = {}
    hold = {ALICE: [(A_IN, x_size)], BOB: [(B_IN, y_size)]}
    if ent_dim > 1:
        pre = random_state(rng, RegisterLayout(("T_A", "T_B"), (ent_dim, ent_dim)))
        owners = {"T_A": ALICE, "T_B": BOB}
        hold[ALICE].append(("T_A", ent_dim))
        hold[BOB].append(("T_B", ent_dim))
    last = {sender_of(rounds + 1): rounds + 1, sender_of(rounds): rounds}
    transit: list[tuple[str, int]] = []
    steps = []
    outputs = {}
    for i in range(1, rounds + 2):
        s = sender_of(i)
        ins = RegisterLayout.of(hold[s] + transit)
        c = msg_dim if i <= rounds else 1
        o = out_dim if last[s] == i else 1
        mem = -(-ins.total // (c * o))
        outs = []
        if o > 1:
            outs.append((f"O_{s}", o))
        outs.append((f"M{i}", mem))
        if i <= rounds:
            outs.append((f"C{i}", c))
        steps.append(Step(s, random_isometry(rng, ins, RegisterLayout.of(outs)), (f"C{i}",) if i <= rounds else ()))
        hold[s] = [x for x in outs if not x[0].startswith("C")]
        transit = [(f"C{i}", c)] if i <= rounds else []
        if last[s] == i:
            outputs[s] = (f"O_{s}",) if o > 1 else ()
    return ProtocolSpec(x_size, y_size, steps, pre, owners, outputs, f"random(r={rounds})")


BUILTINS = {
    "and": "AND ping-pong protocol; parameter r",
    "classical-and": "classical exchange for AND",
    "dummy": "fresh |0> exchange; parameter rounds",
    "constant": "both output 0",
    "random-bit": "both output a shared random bit",
}


def build_named(name: str, r: int = 1, rounds: int = 1) -> ProtocolSpec:
    from .engine import and_task

    if name == "and":
        return build_and_protocol(r)
    if name == "classical-and":
        return build_classical_exchange(and_task())
    if name == "dummy":
        return build_dummy(rounds)
    if name == "constant":
        return build_constant_output(0)
    if name == "random-bit":
        return build_random_output()
    raise InputError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
