import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from qicsim.builtins import reflection
from qicsim.errors import DimCapError, InvalidStateError, IsometryError, LabelError
from qicsim.config import Settings
from qicsim.linalg import (
    DensityOperator,
    GlobalPureState,
    Isometry,
    RegisterLayout,
    apply_isometry,
    compose,
    eig_hermitian,
    partial_trace,
    permute,
    purify,
    tensor,
    trace_distance,
)
from qicsim.sampling import random_density, random_isometry, random_state

PLUS = np.array([1, 1]) / math.sqrt(2)
BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)


def qubit(label, vec):
    return GlobalPureState.single(label, vec)


def dens(label, m):
    m = np.asarray(m, dtype=complex)
    return DensityOperator(RegisterLayout((label,), (m.shape[0],)), m)


class TestLayout:
    def test_row_major_first_label_most_significant(self):
        lay = RegisterLayout(("A", "B"), (2, 3))
        s = GlobalPureState.basis(lay, (1, 2))
        assert np.argmax(np.abs(s.amplitudes)) == 1 * 3 + 2
        assert lay.total == 6

    def test_rejects_duplicates_and_zero_dims(self):
        with pytest.raises(LabelError):
            RegisterLayout(("A", "A"), (2, 2))
        with pytest.raises(LabelError):
            RegisterLayout(("A",), (0,))

    def test_unknown_label(self):
        with pytest.raises(LabelError):
            RegisterLayout(("A",), (2,)).index("B")


class TestValidation:
    def test_unnormalized_state(self):
        with pytest.raises(InvalidStateError):
            qubit("A", [1, 1])

    def test_density_checks(self):
        with pytest.raises(InvalidStateError):
            dens("A", [[1, 0.5], [0, 0]])
        with pytest.raises(InvalidStateError):
            dens("A", [[1.5, 0], [0, -0.5]])

    def test_non_isometry(self):
        lay = RegisterLayout(("A",), (2,))
        with pytest.raises(IsometryError):
            Isometry(lay, lay, [[1, 1], [0, 1]])
        with pytest.raises(IsometryError):
            Isometry(lay, lay, np.eye(3))


class TestTensor:
    def test_basis_product(self):
        s = tensor(qubit("A", [1, 0]), qubit("B", [0, 1]))
        assert_allclose(s.amplitudes, [0, 1, 0, 0])
        assert s.layout.labels == ("A", "B")

    def test_plus_plus(self):
        s = tensor(qubit("A", PLUS), qubit("B", PLUS))
        assert_allclose(s.amplitudes, np.full(4, 0.5))

    def test_norm_random(self):
        rng = np.random.default_rng(1)
        a = random_state(rng, RegisterLayout(("A",), (2,)))
        b = random_state(rng, RegisterLayout(("B",), (3,)))
        assert abs(np.linalg.norm(tensor(a, b).amplitudes) - 1) < 1e-12


class TestPartialTrace:
    def test_product_basis(self):
        s = GlobalPureState.basis(RegisterLayout(("A", "B"), (2, 2)), (0, 0))
        assert_allclose(partial_trace(s, ["A"]).matrix, [[1, 0], [0, 0]])

    def test_bell_marginal(self):
        s = GlobalPureState(RegisterLayout(("A", "B"), (2, 2)), BELL)
        assert_allclose(partial_trace(s, ["A"]).matrix, np.eye(2) / 2, atol=1e-15)

    def test_density_input_matches_pure_input(self):
        rng = np.random.default_rng(2)
        s = random_state(rng, RegisterLayout(("A", "B", "C"), (2, 3, 2)))
        for keep in (["A"], ["B"], ["A", "C"], ["C", "B"]):
            assert_allclose(partial_trace(s.density(), keep).matrix, partial_trace(s, keep).matrix, atol=1e-13)

    def test_keep_order_follows_layout(self):
        s = tensor(qubit("A", [1, 0]), qubit("B", [0, 1]))
        rho = partial_trace(s, ["B", "A"])
        assert rho.layout.labels == ("A", "B")

    def test_dim_cap(self):
        s = GlobalPureState.basis(RegisterLayout(("A", "B"), (8, 8)), (0, 0))
        with pytest.raises(DimCapError):
            partial_trace(s, ["A"], Settings(dim_cap=4))

    def test_purify_roundtrip(self):
        rng = np.random.default_rng(3)
        lay = RegisterLayout(("A",), (3,))
        for _ in range(50):
            rho = random_density(rng, lay)
            back = partial_trace(purify(rho, "R"), ["A"])
            assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-10


class TestPurify:
    def test_pure_input(self):
        s = purify(dens("A", [[1, 0], [0, 0]]), "R")
        assert_allclose(np.abs(s.amplitudes), [1, 0, 0, 0], atol=1e-15)

    def test_maximally_mixed(self):
        s = purify(dens("A", np.eye(2) / 2), "R")
        rho = partial_trace(s, ["A"]).matrix
        assert_allclose(rho, np.eye(2) / 2, atol=1e-15)
        # maximally entangled: the 2x2 coefficient matrix is unitary / sqrt(2)
        c = s.amplitudes.reshape(2, 2) * math.sqrt(2)
        assert_allclose(c @ c.conj().T, np.eye(2), atol=1e-14)

    def test_diagonal(self):
        s = purify(dens("A", np.diag([0.7, 0.3])), "R")
        assert_allclose(s.amplitudes, [math.sqrt(0.7), 0, 0, math.sqrt(0.3)], atol=1e-15)

    def test_label_collision(self):
        with pytest.raises(LabelError):
            purify(dens("A", np.eye(2) / 2), "A")


class TestApplyIsometry:
    def test_identity(self):
        rng = np.random.default_rng(4)
        s = random_state(rng, RegisterLayout(("A", "B"), (2, 3)))
        out = apply_isometry(s, Isometry.identity(RegisterLayout(("B",), (3,))))
        assert_allclose(out.amplitudes, s.amplitudes)

    def test_reflection_rotates_zero(self):
        lay = RegisterLayout(("C",), (2,))
        out = apply_isometry(qubit("C", [1, 0]), Isometry(lay, lay, reflection(math.pi / 8)))
        assert_allclose(out.amplitudes, [math.cos(math.pi / 4), math.sin(math.pi / 4)], atol=1e-15)

    def test_copy(self):
        ins = RegisterLayout(("B",), (2,))
        outs = RegisterLayout(("Bp", "B"), (2, 2))
        copy = Isometry.from_function(ins, outs, lambda b: (b, b))
        out = apply_isometry(qubit("B", PLUS), copy)
        assert_allclose(out.amplitudes, BELL, atol=1e-15)

    def test_acts_on_named_register_only(self):
        lay = RegisterLayout(("B",), (2,))
        flip = Isometry(lay, lay, [[0, 1], [1, 0]])
        s = GlobalPureState.basis(RegisterLayout(("A", "B"), (2, 2)), (1, 0))
        out = apply_isometry(s, flip)
        assert_allclose(out.amplitudes, [0, 0, 0, 1])

    def test_compose_matches_sequential(self):
        rng = np.random.default_rng(5)
        a = RegisterLayout(("A",), (2,))
        ab = RegisterLayout(("A", "M"), (2, 2))
        v1 = random_isometry(rng, a, ab)
        v2 = random_isometry(rng, RegisterLayout(("M", "B"), (2, 2)), RegisterLayout(("M", "B"), (2, 2)))
        s = random_state(rng, RegisterLayout(("A", "B"), (2, 2)))
        seq = apply_isometry(apply_isometry(s, v1), v2)
        one = apply_isometry(s, compose(v1, v2))
        one = permute(one, seq.layout.labels)
        assert_allclose(one.amplitudes, seq.amplitudes, atol=1e-13)


class TestTraceDistance:
    def test_examples(self):
        z, o = dens("A", [[1, 0], [0, 0]]), dens("A", [[0, 0], [0, 1]])
        assert trace_distance(z, z) == 0
        assert trace_distance(z, o) == pytest.approx(2)
        assert trace_distance(dens("A", np.eye(2) / 2), z) == pytest.approx(1)

    def test_layout_mismatch(self):
        with pytest.raises(LabelError):
            trace_distance(dens("A", np.eye(2) / 2), dens("B", np.eye(2) / 2))


class TestEig:
    def test_descending(self):
        vals, _ = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
        assert_allclose(vals, [3, 2, 1])

    def test_pauli_x(self):
        vals, vecs = eig_hermitian([[0, 1], [1, 0]])
        assert_allclose(vals, [1, -1], atol=1e-15)
        assert vecs[0, 0].real > 0 and abs(vecs[0, 0].imag) < 1e-15

    def test_half_mixture_of_rotated_states(self):
        theta = math.pi / 8
        v = np.array([math.cos(2 * theta), math.sin(2 * theta)])
        rho = 0.5 * np.diag([1.0, 0.0]) + 0.5 * np.outer(v, v)
        vals, _ = eig_hermitian(rho)
        assert_allclose(vals, [math.cos(theta) ** 2, math.sin(theta) ** 2], atol=1e-15)
        assert_allclose(vals, [0.85355339, 0.14644661], atol=1e-8)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidStateError):
            eig_hermitian([[0, 1], [0, 0]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 4), st.integers(2, 3))
def test_isometries_preserve_norm(seed, d_in, extra):
    rng = np.random.default_rng(seed)
    v = random_isometry(rng, RegisterLayout(("A",), (d_in,)), RegisterLayout(("A", "E"), (d_in, extra)))
    s = random_state(rng, RegisterLayout(("A", "B"), (d_in, 2)))
    out = apply_isometry(s, v)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12
    assert_allclose(partial_trace(out, ["B"]).matrix, partial_trace(s, ["B"]).matrix, atol=1e-12)
