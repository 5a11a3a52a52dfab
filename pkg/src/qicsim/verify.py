"""Seeded property suites.

Every property is a function ``trial(rng) -> error`` returning a nonnegative
violation measure (``|lhs - rhs|`` for identities, ``max(0, lhs - rhs)`` for
inequalities); a trial passes when the error is at most the property's
tolerance. Each property draws from its own generator seeded by
``(seed, crc32(name))``, so results do not depend on which suites run.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .builtins import (
    and_qic_closed_form,
    and_round_entropy,
    build_and_protocol,
    c_vector,
    conditional_entropy_of,
    mu_star,
    mu_w,
    random_protocol,
)
from .calibration import AND_BLOWUP_C, AND_BLOWUP_RS, AND_BLOWUP_WS, AND_DECAY_BAND
from .composition import append_local, convex_mix, parallel, relabel, split_marginal
from .discrepancy import BooleanTable, disc_fast, disc_oracle, gdm_delta, witness_sum
from .engine import (
    B_IN,
    R1,
    R2,
    InputDistribution,
    Transcript,
    and_task,
    information_terms,
    qic,
    run,
    worst_case_error,
)
from .linalg import (
    DensityOperator,
    GlobalPureState,
    Isometry,
    RegisterLayout,
    apply_isometry,
    eig_hermitian,
    partial_trace,
    purify,
    tensor,
    trace_distance,
)
from .measures import binary_entropy, cqmi, entropy, tv_distance
from .sampling import random_density, random_isometry, random_probs, random_state, random_unitary

SUITES = ("linalg", "info", "engine", "and", "disc")


@dataclass(frozen=True)
class Property:
    suite: str
    name: str
    tol: float
    trial: Callable[[np.random.Generator], float]
    deterministic: bool = False


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    name: str
    trials: int
    passed: int
    max_error: float
    tol: float

    @property
    def failed(self) -> int:
        return self.trials - self.passed

    @property
    def ok(self) -> bool:
        return self.passed == self.trials


def _rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def _dist(rng, x=2, y=2) -> InputDistribution:
    return InputDistribution(random_probs(rng, x, y))


def small_protocol(rng: np.random.Generator, max_dim: int = 64) -> "ProtocolSpec":  # noqa: F821
    """Random protocol on 2x2 inputs whose largest register product is at most ``max_dim``."""
    while True:
        p = random_protocol(
            rng,
            rounds=int(rng.integers(1, 4)),
            msg_dim=int(rng.integers(2, 4)),
            ent_dim=int(rng.integers(1, 3)),
        )
        if p.max_dimension() <= max_dim:
            return p


def _qic(p, mu) -> float:
    return qic(p, mu).qic_total


# ---------------------------------------------------------------------------
# linalg


def _channel(rng, rho: DensityOperator, v: Isometry) -> DensityOperator:
    m = v.matrix @ rho.matrix @ v.matrix.conj().T
    full = DensityOperator(v.outputs, m, check=False)
    return partial_trace(full, [v.outputs.labels[0]])


def _trace_monotone(rng) -> float:
    d, e = int(rng.integers(2, 5)), int(rng.integers(2, 4))
    lay = RegisterLayout(("S",), (d,))
    r1, r2 = random_density(rng, lay), random_density(rng, lay)
    v = random_isometry(rng, lay, RegisterLayout(("S2", "E"), (d, e)))
    return max(0.0, trace_distance(_channel(rng, r1, v), _channel(rng, r2, v)) - trace_distance(r1, r2))


def _trace_isometric(rng) -> float:
    d = int(rng.integers(2, 6))
    lay = RegisterLayout(("S",), (d,))
    r1, r2 = random_density(rng, lay), random_density(rng, lay)
    u = random_unitary(rng, d)
    u1 = DensityOperator(lay, u @ r1.matrix @ u.conj().T)
    u2 = DensityOperator(lay, u @ r2.matrix @ u.conj().T)
    return abs(trace_distance(u1, u2) - trace_distance(r1, r2))


def _trace_adjoin(rng) -> float:
    lay = RegisterLayout(("S",), (int(rng.integers(2, 4)),))
    r1, r2 = random_density(rng, lay), random_density(rng, lay)
    sig = random_density(rng, RegisterLayout(("T",), (int(rng.integers(2, 4)),)))
    big = lay.concat(sig.layout)
    a = DensityOperator(big, np.kron(r1.matrix, sig.matrix))
    b = DensityOperator(big, np.kron(r2.matrix, sig.matrix))
    return abs(trace_distance(a, b) - trace_distance(r1, r2))


def _trace_joint_linearity(rng) -> float:
    k, d = 3, 2
    p = rng.dirichlet(np.ones(k))
    lay = RegisterLayout(("S",), (d,))
    pairs = [(random_density(rng, lay), random_density(rng, lay)) for _ in range(k)]
    big = RegisterLayout(("X", "S"), (k, d))
    m1 = np.zeros((k * d, k * d), dtype=complex)
    m2 = np.zeros_like(m1)
    for x, (a, b) in enumerate(pairs):
        m1[x * d : (x + 1) * d, x * d : (x + 1) * d] = p[x] * a.matrix
        m2[x * d : (x + 1) * d, x * d : (x + 1) * d] = p[x] * b.matrix
    lhs = trace_distance(DensityOperator(big, m1), DensityOperator(big, m2))
    rhs = sum(p[x] * trace_distance(a, b) for x, (a, b) in enumerate(pairs))
    return abs(lhs - rhs)


def _purify_roundtrip(rng) -> float:
    rho = random_density(rng, RegisterLayout(("S",), (3,)))
    back = partial_trace(purify(rho, "R"), ["S"])
    return float(np.max(np.abs(back.matrix - rho.matrix)))


def _eig_reconstruction(rng) -> float:
    d = int(rng.integers(2, 9))
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (a + a.conj().T) / 2
    vals, vecs = eig_hermitian(h)
    err = float(np.max(np.abs(vecs @ np.diag(vals) @ vecs.conj().T - h)))
    return err + (0.0 if np.all(np.diff(vals) <= 0) else 1.0)


# ---------------------------------------------------------------------------
# info


def _state(rng, labels, dims) -> GlobalPureState:
    return random_state(rng, RegisterLayout(tuple(labels), tuple(dims)))


def _pure_symmetry(rng) -> float:
    st = _state(rng, "AB", (int(rng.integers(2, 5)), int(rng.integers(2, 6))))
    return abs(entropy(st, "A") - entropy(st, "B"))


def _chain_rule(rng) -> float:
    st = _state(rng, "ABCDE", (2, 2, 2, 2, 2))
    lhs = cqmi(st, ["A", "B"], "C", "D")
    rhs = cqmi(st, "A", "C", "D") + cqmi(st, "B", "C", ["A", "D"])
    return abs(lhs - rhs)


def _ssa(rng) -> float:
    st = _state(rng, "ABCD", (2, 2, 2, int(rng.integers(2, 5))))
    return max(0.0, -cqmi(st, "A", "B", "C"))


def _data_processing(rng) -> float:
    st = _state(rng, "ABCE", (2, 2, 2, 2))
    v = random_isometry(rng, RegisterLayout(("B",), (2,)), RegisterLayout(("B2", "F"), (2, 2)))
    after = apply_isometry(st, v)
    return max(0.0, cqmi(after, "A", ["B2"], "C") - cqmi(st, "A", "B", "C"))


def _purification_invariance(rng) -> float:
    st = _state(rng, ["C", "B", "R"], (2, 2, 4))
    v = random_isometry(rng, RegisterLayout(("R",), (4,)), RegisterLayout(("R2",), (int(rng.integers(4, 9)),)))
    other = apply_isometry(st, v)
    return abs(cqmi(other, "C", ["R2"], "B") - cqmi(st, "C", "R", "B"))


def _classical_conditioning(rng) -> float:
    k = 3
    p = rng.dirichlet(np.ones(k))
    parts = [_state(rng, "ABCE", (2, 2, 2, 2)) for _ in range(k)]
    lay = RegisterLayout(("X", "X2", "A", "B", "C", "E"), (k, k, 2, 2, 2, 2))
    t = np.zeros((k, k, 16), dtype=complex)
    for x in range(k):
        t[x, x] = math.sqrt(p[x]) * parts[x].amplitudes
    st = GlobalPureState(lay, t.reshape(-1))
    lhs = cqmi(st, "A", "B", ["C", "X"])
    rhs = sum(p[x] * cqmi(parts[x], "A", "B", "C") for x in range(k))
    return abs(lhs - rhs)


def _additivity(rng) -> float:
    s1 = _state(rng, ["A1", "B1", "C1", "E1"], (2, 2, 2, 2))
    s2 = _state(rng, ["A2", "B2", "C2", "E2"], (2, 2, 2, 2))
    st = tensor(s1, s2)
    lhs = cqmi(st, ["A1", "A2"], ["B1", "B2"], ["C1", "C2"])
    return abs(lhs - cqmi(s1, "A1", "B1", "C1") - cqmi(s2, "A2", "B2", "C2"))


# ---------------------------------------------------------------------------
# engine


def _qic_le_qcc(rng) -> float:
    p = small_protocol(rng)
    rep = qic(p, _dist(rng))
    return max(0.0, -rep.qic_total) + max(0.0, rep.qic_total - rep.qcc)


def _add1(rng) -> float:
    p1, p2 = small_protocol(rng), small_protocol(rng)
    m1, m2 = _dist(rng), _dist(rng)
    return abs(_qic(parallel(p1, p2), m1.product(m2)) - _qic(p1, m1) - _qic(p2, m2))


def _add2(rng) -> float:
    p1, p2 = small_protocol(rng), small_protocol(rng)
    m1, m2 = _dist(rng), _dist(rng)
    pp = parallel(p1, p2)
    first = split_marginal(pp, m2, 0, (2, 2), (2, 2))
    second = split_marginal(pp, m1, 1, (2, 2), (2, 2))
    return abs(_qic(first, m1) + _qic(second, m2) - _qic(pp, m1.product(m2)))


def _conv(rng) -> float:
    p1, p2 = small_protocol(rng), small_protocol(rng)
    mu = _dist(rng)
    w = float(rng.random())
    return abs(_qic(convex_mix(w, p1, p2), mu) - w * _qic(p1, mu) - (1 - w) * _qic(p2, mu))


def _subadd(rng) -> float:
    p1, p2 = small_protocol(rng), small_protocol(rng)
    joint = _dist(rng, 4, 4)
    m1, m2 = joint.marginals((2, 2), (2, 2))
    return max(0.0, _qic(parallel(p1, p2), joint) - _qic(p1, m1) - _qic(p2, m2))


def _concavity(rng) -> float:
    p = small_protocol(rng)
    k = 3
    nu = rng.dirichlet(np.ones(k))
    rhos = [_dist(rng) for _ in range(k)]
    avg = InputDistribution(sum(n * r.probs for n, r in zip(nu, rhos)))
    return max(0.0, sum(n * _qic(p, r) for n, r in zip(nu, rhos)) - _qic(p, avg))


def _quasi_convexity(rng) -> float:
    p = small_protocol(rng)
    m1, m2 = _dist(rng), _dist(rng)
    w = float(rng.random())
    bound = w * _qic(p, m1) + (1 - w) * _qic(p, m2) + p.rounds * binary_entropy(w)
    return max(0.0, _qic(p, m1.mix(w, m2)) - bound)


def _continuity(rng) -> float:
    p = small_protocol(rng)
    m1 = _dist(rng)
    # mix toward a second prior to cover small distances too
    m2 = m1.mix(float(rng.random()), _dist(rng))
    d = tv_distance(m1, m2).delta
    r = p.rounds
    bound = d * r * (math.log2(p.x_size) + math.log2(p.y_size)) + r * binary_entropy(min(d, 1.0))
    return max(0.0, abs(_qic(p, m1) - _qic(p, m2)) - bound)


ONEZERO_C = 2.0


def _onezero(rng) -> float:
    p = small_protocol(rng)
    w = 0.5 * float(rng.random())
    rest = rng.dirichlet(np.ones(3)) * (1 - w)
    mu = InputDistribution(np.array([[rest[0], rest[1]], [rest[2], w]]))
    mu0 = InputDistribution(np.array([[rest[0], rest[1]], [rest[2], 0.0]]) / rest.sum())
    return max(0.0, _qic(p, mu) - _qic(p, mu0) - ONEZERO_C * p.rounds * binary_entropy(w))


def _relabel_invariance(rng) -> float:
    p = small_protocol(rng)
    mu = _dist(rng)
    names = set(p.dims()) - {"A_in", "B_in"}
    q = relabel(p, {l: f"z_{l}" for l in names})
    return abs(_qic(q, mu) - _qic(p, mu))


def _local_identity_invariance(rng) -> float:
    p = small_protocol(rng)
    mu = _dist(rng)
    q = p
    for party in ("A", "B"):
        outs = p.outputs[party]
        if outs:
            lay = RegisterLayout(outs, tuple(p.dims()[l] for l in outs))
            q = append_local(q, party, Isometry.identity(lay))
    return abs(_qic(q, mu) - _qic(p, mu))


def _reference_invariance(rng) -> float:
    p = small_protocol(rng)
    mu = _dist(rng)
    t = run(p, mu)
    n = mu.x_size * mu.y_size
    v = random_isometry(rng, RegisterLayout((R1, R2), (n, n)), RegisterLayout(("Rx",), (n * n + 3,)))
    snaps = tuple(type(s)(s.step, s.sender, apply_isometry(s.state, v), s.roles) for s in t.snapshots)
    alt = Transcript(p, mu, snaps, ("Rx",))
    a = sum(x.contribution for x in information_terms(alt))
    b = sum(x.contribution for x in information_terms(t))
    return abs(a - b)


# ---------------------------------------------------------------------------
# AND protocol (deterministic)


def _and_exact(rng) -> float:
    err = 0.0
    for r in range(1, 9):
        p = build_and_protocol(r)
        err = max(err, worst_case_error(p, and_task()))
        c = c_vector(run(p, InputDistribution.point(2, 2, 1, 1)), 4 * r)
        err = max(err, float(np.max(np.abs(c - np.array([0.0, -1.0])))))
    return err


def _and_y0_entropy(rng) -> float:
    err = 0.0
    for r in range(1, 7):
        t = run(build_and_protocol(r), mu_star())
        for i in range(1, 4 * r, 2):
            engine = conditional_entropy_of(t, i, B_IN, 0)
            err = max(err, abs(engine - and_round_entropy(i, r, 0.0, branch=0)))
    return err


def _and_qic_expansion(rng) -> float:
    err = 0.0
    for r in range(1, 9):
        t = run(build_and_protocol(r), mu_star())
        terms = information_terms(t)
        for term in terms[:-1]:
            h0 = conditional_entropy_of(t, term.round, B_IN, 0)
            err = max(err, abs(term.contribution - h0 / 3.0))
        err = max(err, abs(terms[-1].contribution))
        err = max(err, abs(sum(x.contribution for x in terms) - and_qic_closed_form(r)))
    return err


def and_decay_values(rs=range(1, 17)) -> list[float]:
    return [_qic(build_and_protocol(r), mu_star()) for r in rs]


def _and_decay(rng) -> float:
    vals = and_decay_values()
    err = 0.0
    for a, b in zip(vals, vals[1:]):
        err = max(err, 0.0 if b < a else 1.0 + (b - a))
    lo, hi = AND_DECAY_BAND
    for r, q in enumerate(vals, start=1):
        s = r * q / math.log2(8 * r)
        err = max(err, lo - s, s - hi, 0.0)
    return err


def _and_mass_w(rng) -> float:
    err = 0.0
    for r in AND_BLOWUP_RS:
        p = build_and_protocol(r)
        base = _qic(p, mu_star())
        for w in AND_BLOWUP_WS:
            t = run(p, mu_w(w))
            for i in range(1, 4 * r, 2):
                engine = conditional_entropy_of(t, i, B_IN, 1)
                err = max(err, abs(engine - and_round_entropy(i, r, w, branch=1)))
            delta = sum(x.contribution for x in information_terms(t)) - base
            err = max(err, AND_BLOWUP_C * r * binary_entropy(w) - delta)
    return err


# ---------------------------------------------------------------------------
# discrepancy


def _table(rng, max_side=4):
    nx, ny = (int(v) for v in rng.integers(1, max_side + 1, 2))
    g = BooleanTable(rng.integers(0, 2, (nx, ny)))
    return g, random_probs(rng, nx, ny)


def _disc_equivalence(rng) -> float:
    g, mu = _table(rng)
    a, b = disc_oracle(g, mu), disc_fast(g, mu)
    return 0.0 if a.value == b.value else 1.0 + abs(a.value - b.value)


def _disc_witness(rng) -> float:
    g, mu = _table(rng)
    err = 0.0
    for res in (disc_oracle(g, mu), disc_fast(g, mu)):
        err = max(err, abs(witness_sum(g, mu, res.rows, res.cols) - res.value))
        if not 0.0 < res.value <= 1.0 + 1e-12:
            err = max(err, 1.0)
    return err


def _gdm_monotone(rng) -> float:
    g, mu = _table(rng, 3)
    deltas = sorted(rng.random(3).tolist())
    vals = [gdm_delta(g, mu, d).value for d in [0.0] + deltas + [1.0]]
    return max([0.0] + [a - b for a, b in zip(vals, vals[1:])])


def _gdm_delta0(rng) -> float:
    g, mu = _table(rng)
    mu = mu + 1e-3
    mu = mu / mu.sum()
    return abs(gdm_delta(g, mu, 0.0).value - math.log2(1.0 / disc_fast(g, mu).value))


def _gdm_xor(rng) -> float:
    v = gdm_delta(BooleanTable.xor(), np.full((2, 2), 0.25), 0.0).value
    return 0.0 if v == 2.0 else 1.0 + abs(v - 2.0)


PROPERTIES: tuple[Property, ...] = (
    Property("linalg", "trace_distance_monotone", 1e-9, _trace_monotone),
    Property("linalg", "trace_distance_isometric", 1e-9, _trace_isometric),
    Property("linalg", "trace_distance_adjoin", 1e-9, _trace_adjoin),
    Property("linalg", "trace_distance_joint_linearity", 1e-9, _trace_joint_linearity),
    Property("linalg", "purify_roundtrip", 1e-10, _purify_roundtrip),
    Property("linalg", "eig_reconstruction", 1e-9, _eig_reconstruction),
    Property("info", "pure_symmetry", 1e-9, _pure_symmetry),
    Property("info", "chain_rule", 1e-8, _chain_rule),
    Property("info", "strong_subadditivity", 1e-8, _ssa),
    Property("info", "data_processing", 1e-8, _data_processing),
    Property("info", "purification_invariance", 1e-8, _purification_invariance),
    Property("info", "classical_conditioning", 1e-8, _classical_conditioning),
    Property("info", "additivity", 1e-8, _additivity),
    Property("engine", "qic_le_qcc", 1e-8, _qic_le_qcc),
    Property("engine", "additivity", 1e-8, _add1),
    Property("engine", "splitting", 1e-8, _add2),
    Property("engine", "convex_mix", 1e-8, _conv),
    Property("engine", "subadditivity", 1e-8, _subadd),
    Property("engine", "concavity", 1e-8, _concavity),
    Property("engine", "quasi_convexity", 1e-8, _quasi_convexity),
    Property("engine", "continuity", 1e-8, _continuity),
    Property("engine", "onezero", 1e-8, _onezero),
    Property("engine", "relabel_invariance", 1e-9, _relabel_invariance),
    Property("engine", "local_identity_invariance", 1e-9, _local_identity_invariance),
    Property("engine", "reference_invariance", 1e-8, _reference_invariance),
    Property("and", "exact_on_all_inputs", 1e-9, _and_exact, True),
    Property("and", "y0_entropy_pattern", 1e-8, _and_y0_entropy, True),
    Property("and", "qic_expansion", 1e-8, _and_qic_expansion, True),
    Property("and", "qic_decay", 0.0, _and_decay, True),
    Property("and", "mass_w_blowup", 1e-8, _and_mass_w, True),
    Property("disc", "oracle_equivalence", 0.0, _disc_equivalence),
    Property("disc", "witness_validity", 1e-12, _disc_witness),
    Property("disc", "gdm_monotone_in_delta", 0.0, _gdm_monotone),
    Property("disc", "gdm_delta0_full_support", 1e-12, _gdm_delta0),
    Property("disc", "gdm_xor_uniform", 0.0, _gdm_xor, True),
)


def select(suite: str) -> list[Property]:
    if suite == "all":
        return list(PROPERTIES)
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    return [p for p in PROPERTIES if p.suite == suite]


def run_property(prop: Property, trials: int, seed: int) -> PropertyResult:
    rng = _rng(seed, f"{prop.suite}.{prop.name}")
    n = 1 if prop.deterministic else trials
    passed, worst = 0, 0.0
    for _ in range(n):
        e = float(prop.trial(rng))
        worst = max(worst, e)
        passed += e <= prop.tol
    return PropertyResult(prop.suite, prop.name, n, passed, worst, prop.tol)


def run_suite(suite: str, trials: int, seed: int) -> list[PropertyResult]:
    return [run_property(p, trials, seed) for p in select(suite)]
