import math

import numpy as np
import pytest

from qicsim.builtins import (
    AndProtocolParams,
    and_angle,
    and_qic_closed_form,
    and_round_entropy,
    build_and_protocol,
    build_classical_exchange,
    build_dummy,
    build_named,
    c_vector,
    conditional_entropy_of,
    mu_star,
    mu_w,
    random_protocol,
    reflection,
)
from qicsim.composition import parallel
from qicsim.engine import B_IN, InputDistribution, and_task, information_terms, qic, run, worst_case_error
from qicsim.errors import InputError
from qicsim.measures import binary_entropy


def point(x, y):
    return InputDistribution.point(2, 2, x, y)


def c_angles(r, x, y):
    """Angle of C after each message, read from the simulated state."""
    t = run(build_and_protocol(r), point(x, y))
    out = []
    for i in range(1, 4 * r + 1):
        c = c_vector(t, i)
        out.append(math.atan2(c[1].real, c[0].real))
    return out


class TestReflection:
    def test_unitary_involution(self):
        u = reflection(0.3)
        assert np.allclose(u @ u, np.eye(2))

    def test_rotates_zero_by_double_angle(self):
        th = math.pi / 8
        assert np.allclose(reflection(th) @ [1, 0], [math.cos(2 * th), math.sin(2 * th)])


class TestAndProtocol:
    def test_params(self):
        p = AndProtocolParams(3)
        assert p.theta == pytest.approx(math.pi / 24) and p.messages == 12
        with pytest.raises(InputError):
            AndProtocolParams(0)

    def test_qcc(self):
        for r in (1, 2, 5):
            assert qic(build_and_protocol(r), mu_star()).qcc == 4 * r

    def test_trajectory_11(self):
        r = 2
        th = math.pi / (8 * r)
        got = c_angles(r, 1, 1)
        want = [(-1) ** (i + 1) * 2 * th * ((i + 1) // 2) for i in range(1, 4 * r)]
        assert np.allclose(got[: 4 * r - 1], want, atol=1e-12)
        c = c_vector(run(build_and_protocol(r), point(1, 1)), 4 * r)
        assert np.allclose(c, [0, -1], atol=1e-12)

    def test_trajectory_10(self):
        th = math.pi / 8
        got = c_angles(1, 1, 0)
        assert np.allclose(got, [2 * th, 2 * th, 0, 0], atol=1e-12)

    def test_trajectory_0y(self):
        for y in (0, 1):
            assert np.allclose(c_angles(3, 0, y), 0, atol=1e-12)

    def test_angle_helper_matches_simulation(self):
        for x, y in ((1, 1), (1, 0), (0, 1)):
            got = c_angles(2, x, y)
            want = [and_angle(2, x, y, i) for i in range(1, 9)]
            assert np.allclose(np.cos(got), np.cos(want), atol=1e-12)

    def test_exact(self):
        for r in (1, 4, 8):
            assert worst_case_error(build_and_protocol(r), and_task()) <= 1e-9

    def test_closed_form_values(self):
        expected = {1: 0.400584, 2: 0.311102, 4: 0.208477, 8: 0.130194, 16: 0.077987}
        for r, v in expected.items():
            assert and_qic_closed_form(r) == pytest.approx(v, abs=1e-6)

    def test_engine_matches_closed_form(self):
        for r in (1, 2, 3):
            assert qic(build_and_protocol(r), mu_star()).qic_total == pytest.approx(and_qic_closed_form(r), abs=1e-10)

    def test_answer_message_is_free_under_mu_star(self):
        terms = information_terms(run(build_and_protocol(2), mu_star()))
        assert abs(terms[-1].contribution) < 1e-12
        assert len(terms) == 8


class TestRoundEntropy:
    def test_y1_branch_pure_without_mass(self):
        t = run(build_and_protocol(2), mu_star())
        for i in (1, 3, 5, 7):
            assert and_round_entropy(i, 2, 0.0) == 0
            assert conditional_entropy_of(t, i, B_IN, 1) == pytest.approx(0, abs=1e-10)

    def test_y0_branch(self):
        r = 3
        t = run(build_and_protocol(r), mu_star())
        h = binary_entropy(math.sin(math.pi / (8 * r)) ** 2)
        for i in range(1, 4 * r, 2):
            want = h if i % 4 == 1 else 0.0
            assert and_round_entropy(i, r, 0.0, branch=0) == pytest.approx(want)
            assert conditional_entropy_of(t, i, B_IN, 0) == pytest.approx(want, abs=1e-10)

    def test_formula_against_engine(self):
        r, w, i = 4, 0.1, 7
        th = math.pi / (8 * r)
        # eigenvalues of the 2x2 mixture, worked out independently of the library helper
        a = (1 - w) / (1 + 2 * w)
        phi = (i + 1) * th
        rho = a * np.diag([1.0, 0.0]) + (1 - a) * np.outer([math.cos(phi), math.sin(phi)], [math.cos(phi), math.sin(phi)])
        lam = np.linalg.eigvalsh(rho)
        direct = float(-sum(v * math.log2(v) for v in lam if v > 0))
        assert and_round_entropy(i, r, w) == pytest.approx(direct, abs=1e-12)
        t = run(build_and_protocol(r), mu_w(w))
        assert conditional_entropy_of(t, i, B_IN, 1) == pytest.approx(direct, abs=1e-8)

    def test_bad_arguments(self):
        with pytest.raises(InputError):
            and_round_entropy(2, 1)
        with pytest.raises(InputError):
            and_round_entropy(1, 1, w=0.7)
        with pytest.raises(InputError):
            and_round_entropy(9, 2)

    def test_mu_w(self):
        assert np.allclose(mu_w(0.1).probs, [[0.3, 0.3], [0.3, 0.1]])
        assert np.allclose(mu_w(0).probs, mu_star().probs)


class TestOtherBuiltins:
    def test_classical_exchange(self):
        p = build_classical_exchange(and_task())
        rep = qic(p, InputDistribution.uniform(2, 2), and_task())
        assert rep.qcc == 2 and rep.avg_error == 0
        assert rep.per_round[0].contribution == pytest.approx(0.5, abs=1e-12)
        assert rep.qic_total <= rep.qcc

    def test_dummy_qcc(self):
        p = build_dummy(3, 4)
        rep = qic(p, mu_star())
        assert rep.qcc == pytest.approx(6) and rep.qic_total == pytest.approx(0, abs=1e-12)

    def test_dummy_leaves_parallel_qic_unchanged(self):
        rng = np.random.default_rng(0)
        p = random_protocol(rng, rounds=2)
        mu = InputDistribution(rng.dirichlet(np.ones(4)).reshape(2, 2))
        both = parallel(p, build_dummy(1))
        assert qic(both, mu.product(InputDistribution.point(2, 2, 0, 0))).qic_total == pytest.approx(
            qic(p, mu).qic_total, abs=1e-9
        )

    def test_build_named(self):
        assert build_named("and", r=2).rounds == 8
        with pytest.raises(InputError):
            build_named("nope")
