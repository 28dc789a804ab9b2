"""Jump systems, generators, semigroups, certification, Alicki extraction."""

import numpy as np
import pytest

from qms.errors import InvalidJumpSystem, NegativeTime, NotGNSSymmetric
from qms.lindblad import (
    JumpSystem,
    build_generator,
    certify,
    dirichlet_form,
    extract_alicki,
    semigroup,
    semigroup_spectral,
    traceless_basis,
)
from qms.modular import WeightedAlgebra
from qms.numkernel import Superoperator, frob
from qms.sampling import random_jump_system, random_weighted_algebra

from conftest import E12, E21, SX, SZ, depolarizing_generator


class TestTracelessBasis:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_orthonormal_traceless(self, n):
        basis = traceless_basis(n)
        assert len(basis) == n * n - 1
        for i, g in enumerate(basis):
            assert abs(np.trace(g)) < 1e-14
            np.testing.assert_allclose(g, g.conj().T, atol=1e-14)
            for j, g2 in enumerate(basis):
                want = 1.0 if i == j else 0.0
                assert abs(np.trace(g @ g2) - want) < 1e-14


class TestJumpSystem:
    def test_reference_system_valid(self, qubit_system):
        res = qubit_system.validate()
        assert max(res.values()) < 1e-14

    def test_auto_pairing(self, w_qubit):
        sys2 = JumpSystem(
            W=w_qubit, jumps=[(E21, np.log(2.0)), (E12, -np.log(2.0))]
        )
        assert sys2.pairing == [1, 0]

    def test_check_valid_raises(self, w_qubit):
        bad = JumpSystem(W=w_qubit, jumps=[(E21, 0.0)], pairing=[0])
        with pytest.raises(InvalidJumpSystem):
            bad.check_valid()


class TestBuildGenerator:
    def test_empty(self, w_qubit):
        l = build_generator(JumpSystem(W=w_qubit, jumps=[], pairing=[]))
        assert frob(l.matrix) == 0.0

    def test_sigma_x_oracle(self, w_tracial):
        system = JumpSystem(
            W=w_tracial, jumps=[(SX / np.sqrt(2.0), 0.0)], pairing=[0]
        )
        l = build_generator(system)
        np.testing.assert_allclose(l.apply(np.eye(2)), 0.0 * SZ, atol=1e-14)
        np.testing.assert_allclose(l.apply(SX), np.zeros((2, 2)), atol=1e-14)
        np.testing.assert_allclose(l.apply(SZ), 2.0 * SZ, atol=1e-14)

    def test_reference_system_unital(self, qubit_system):
        l = build_generator(qubit_system)
        np.testing.assert_allclose(
            l.apply(np.eye(2)), np.zeros((2, 2)), atol=1e-13
        )


class TestSemigroup:
    def test_time_zero(self, qubit_system):
        l = build_generator(qubit_system)
        np.testing.assert_allclose(
            semigroup(l, 0.0).matrix, np.eye(4), atol=1e-14
        )

    def test_negative_time(self, qubit_system):
        with pytest.raises(NegativeTime):
            semigroup(build_generator(qubit_system), -0.1)

    def test_depolarizing_closed_form(self, w_qubit):
        # P_t(x) = e^{-t} x + (1 - e^{-t}) phi(x) 1
        l = depolarizing_generator(w_qubit)
        p1 = semigroup(l, 1.0)
        rng = np.random.default_rng(18)
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        want = np.exp(-1.0) * x + (1 - np.exp(-1.0)) * np.trace(
            x @ w_qubit.h) * np.eye(2)
        np.testing.assert_allclose(p1.apply(x), want, atol=1e-12)

    def test_choi_psd(self, qubit_system3):
        from qms.numkernel import choi
        l = build_generator(qubit_system3)
        for t in (0.3, 0.7):
            ev = np.linalg.eigvalsh(choi(semigroup(l, t)))
            assert ev.min() >= -1e-9

    def test_spectral_crosscheck(self, qubit_system3):
        l = build_generator(qubit_system3)
        a = semigroup(l, 0.9).matrix
        b = semigroup_spectral(l, qubit_system3.W, 0.9).matrix
        assert frob(a - b) < 1e-10 * frob(a)


class TestCertify:
    def test_zero_generator(self, w_qubit):
        rep = certify(Superoperator.zero(2), w_qubit)
        assert rep.all_pass
        assert rep.residuals["unital"] == 0.0

    def test_valid_system(self, qubit_system3):
        rep = certify(build_generator(qubit_system3), qubit_system3.W)
        assert rep.all_pass

    def test_commutator_generator_not_symmetric(self, w_qubit):
        # L(x) = i [d, x] with d Hermitian, [d, h] != 0
        d = SX
        l = 1j * (Superoperator.left_right(d, np.eye(2))
                  - Superoperator.left_right(np.eye(2), d))
        rep = certify(l, w_qubit)
        assert not rep.gns_symmetric


class TestExtractAlicki:
    def test_zero_generator(self, w_qubit):
        system = extract_alicki(Superoperator.zero(2), w_qubit)
        assert system.m == 0

    def test_depolarizing_tracial(self, w_tracial):
        system = extract_alicki(depolarizing_generator(w_tracial), w_tracial)
        assert system.m == 3
        for v, om in system.jumps:
            assert om == 0.0
            assert abs(np.trace(v)) < 1e-12

    def test_reference_system_exact(self, qubit_system):
        """[DERIVED] extraction returns exactly the gauge-fixed pair."""
        l = build_generator(qubit_system)
        ex = extract_alicki(l, qubit_system.W)
        assert ex.m == 2
        np.testing.assert_allclose(ex.jumps[0][0], E21, atol=1e-10)
        assert abs(ex.jumps[0][1] - np.log(2.0)) < 1e-10
        np.testing.assert_allclose(ex.jumps[1][0], E12, atol=1e-10)
        assert abs(ex.jumps[1][1] + np.log(2.0)) < 1e-10
        assert ex.pairing == [1, 0]

    def test_roundtrip(self, qubit_system3):
        l = build_generator(qubit_system3)
        ex = extract_alicki(l, qubit_system3.W)
        assert frob(build_generator(ex).matrix - l.matrix) <= 1e-8 * frob(l.matrix)

    def test_rejects_non_symmetric(self, w_qubit):
        l = 1j * (Superoperator.left_right(SX, np.eye(2))
                  - Superoperator.left_right(np.eye(2), SX))
        with pytest.raises(NotGNSSymmetric):
            extract_alicki(l, w_qubit)


class TestDirichletForm:
    def test_unit_in_kernel(self, qubit_system3):
        form = dirichlet_form(build_generator(qubit_system3), qubit_system3.W)
        assert abs(form(np.eye(2), np.eye(2))) < 1e-12

    def test_depolarizing_closed_form(self, w_qubit):
        form = dirichlet_form(depolarizing_generator(w_qubit), w_qubit)
        rng = np.random.default_rng(19)
        for _ in range(20):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            want = (np.trace(a.conj().T @ a @ w_qubit.h)
                    - abs(np.trace(a @ w_qubit.h)) ** 2)
            assert abs(form(a, a) - want) < 1e-12

    def test_hermitian_symmetry(self, qubit_system3):
        form = dirichlet_form(build_generator(qubit_system3), qubit_system3.W)
        rng = np.random.default_rng(20)
        for _ in range(20):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            assert abs(form(a, b) - np.conj(form(b, a))) < 1e-12

    def test_psd_matrix(self, qubit_system3):
        form = dirichlet_form(build_generator(qubit_system3), qubit_system3.W)
        ev = np.linalg.eigvalsh(form.matrix)
        assert ev.min() >= -1e-12


class TestRandomSampling:
    def test_random_systems_valid(self):
        rng = np.random.default_rng(21)
        for n in (2, 3, 4):
            w = random_weighted_algebra(n, rng)
            system = random_jump_system(w, rng)
            assert max(system.validate().values()) < 1e-10
