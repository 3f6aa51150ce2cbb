import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fro
from projsum.exceptions import ConditionFailed, NotFlat, NotSum, TraceMismatch
from projsum.generators import fillmore_matrix, random_unitary
from projsum.isotropic import IsotropicResolution, zero_diagonal_resolution
from projsum.linalg import Projection
from projsum.projdecomp import (
    IdentityBackgroundOperator,
    decompose_fillmore,
    decompose_identity_background,
    decompose_unit_trace,
    flatten_to_projections,
    resolution_from_projections,
    verify_sum,
)

R3 = np.sqrt(3) / 4
P_PLUS = np.array([[0.75, R3], [R3, 0.25]])
P_MINUS = np.array([[0.75, -R3], [-R3, 0.25]])
A2 = np.diag([1.5, 0.5])


def unit_trace_psd(n, rng):
    U = random_unitary(n, rng)
    w = rng.uniform(0.05, 1.0, n)
    w *= n / w.sum()
    return (U * w) @ U.conj().T


def check_rank_one_list(plist, A, tol=1e-8):
    for P in plist.projections:
        assert fro(P.matrix @ P.matrix - P.matrix) <= tol
        assert P.rank == 1
    assert fro(plist.total() - A) <= tol * max(1, fro(A))


class TestFlatten:
    def test_identity_returns_resolution(self):
        res = IsotropicResolution.from_basis(np.eye(2), np.zeros((2, 2)))
        plist = flatten_to_projections(np.eye(2), res)
        assert np.allclose(plist.projections[0].matrix, np.diag([1, 0]))

    def test_two_by_two_oracle(self):
        basis = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        res = IsotropicResolution.from_basis(basis, A2 - np.eye(2))
        plist = flatten_to_projections(A2, res)
        assert np.abs(plist.projections[0].matrix - P_PLUS).max() < 1e-12
        assert np.abs(plist.projections[1].matrix - P_MINUS).max() < 1e-12
        assert fro(plist.total() - A2) < 1e-12

    def test_rejects_non_flat(self):
        res = IsotropicResolution.from_basis(np.eye(2), A2 - np.eye(2))
        with pytest.raises(NotFlat):
            flatten_to_projections(A2, res)

    def test_random_unit_trace(self, rng):
        A = unit_trace_psd(6, rng)
        plist = flatten_to_projections(A, zero_diagonal_resolution(A - np.eye(6)))
        check_rank_one_list(plist, A)


class TestLift:
    def test_identity(self):
        res, asm = resolution_from_projections(np.eye(2), [np.diag([1.0, 0]), np.diag([0, 1.0])])
        iso, total, orth = res.residuals()
        assert iso < 1e-14 and total < 1e-14
        assert fro(asm.v @ asm.v.conj().T - np.eye(2)) < 1e-14

    def test_two_by_two(self):
        res, asm = resolution_from_projections(A2, [P_PLUS, P_MINUS])
        for E in res.projections:
            assert fro(E.matrix @ A2 @ E.matrix - E.matrix) < 1e-12
        for W, P, F in zip(asm.w_list, [P_PLUS, P_MINUS], asm.f_list):
            assert fro(W.conj().T @ W - P) < 1e-12
            assert fro(W @ W.conj().T - F) < 1e-12

    def test_round_trip(self):
        res, _ = resolution_from_projections(A2, [P_PLUS, P_MINUS])
        again = flatten_to_projections(A2, res)
        assert fro(again.total() - A2) < 1e-12

    def test_errors(self):
        with pytest.raises(TraceMismatch):
            resolution_from_projections(np.diag([2.0, 1.0]), [np.diag([1.0, 0])])
        with pytest.raises(NotSum):
            resolution_from_projections(A2, [np.diag([1.0, 0]), np.diag([1.0, 0])])

    def test_higher_rank_pieces(self):
        A = np.eye(3)
        res, _ = resolution_from_projections(A, [np.diag([1.0, 1.0, 0]), np.diag([0, 0, 1.0])])
        assert res.basis is None
        assert [p.rank for p in res.projections] == [2, 1]


class TestUnitTrace:
    def test_identity(self):
        plist = decompose_unit_trace(np.eye(3))
        assert len(plist) == 3
        check_rank_one_list(plist, np.eye(3))

    def test_two_by_two_oracle(self):
        plist = decompose_unit_trace(A2)
        got = sorted((p.matrix.real for p in plist.projections), key=lambda M: M[0, 1])
        assert np.abs(got[0] - P_MINUS).max() < 1e-12
        assert np.abs(got[1] - P_PLUS).max() < 1e-12

    def test_singular(self):
        A = np.diag([2.0, 1.0, 0.0])
        plist = decompose_unit_trace(A)
        assert len(plist) == 3
        check_rank_one_list(plist, A, 1e-12)

    def test_trace_mismatch(self):
        with pytest.raises(TraceMismatch):
            decompose_unit_trace(np.diag([1.0, 0.5]))


class TestFillmore:
    def test_projection(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((4, 2)))
        P = Q @ Q.T
        plist = decompose_fillmore(P)
        assert len(plist) == 2
        check_rank_one_list(plist, P)

    def test_hand_trace(self):
        plist = decompose_fillmore(np.diag([2.0, 1.0, 0.0]))
        mats = sorted((np.round(p.matrix.real, 12) for p in plist.projections), key=lambda M: -M[0, 0])
        e1 = np.diag([1.0, 0, 0])
        e2 = np.diag([0, 1.0, 0])
        assert np.allclose(mats[0], e1) and np.allclose(mats[1], e1) and np.allclose(mats[2], e2)

    def test_no_peeling(self):
        assert len(decompose_fillmore(A2)) == 2

    def test_zero(self):
        plist = decompose_fillmore(np.zeros((3, 3)))
        assert len(plist) == 0

    def test_rejects(self):
        with pytest.raises(ConditionFailed) as exc:
            decompose_fillmore(np.diag([0.5, 0.5]))
        assert exc.value.report.reason == "TraceBelowRank"

    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_count_law(self, n, seed):
        A = fillmore_matrix(n, seed)
        plist = decompose_fillmore(A)
        assert len(plist) == round(np.trace(A).real)
        check_rank_one_list(plist, A)

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_peeling_keeps_condition(self, n, seed):
        A = fillmore_matrix(n, seed)
        plist = decompose_fillmore(A)
        T = len(plist)
        r = int(np.sum(np.linalg.eigvalsh(A) > 1e-9))
        running = A.copy()
        for P in plist.projections[: T - r]:
            running = running - P.matrix
            assert np.linalg.eigvalsh(running)[0] >= -1e-9


class TestIdentityBackground:
    def test_zero_perturbation(self):
        plist = decompose_identity_background(np.zeros((3, 3)))
        assert len(plist) == 0
        assert plist.background.rank == 3

    def test_balanced_example(self):
        op = IdentityBackgroundOperator.from_block(np.diag([2.0, 0.5, 0.5]))
        plist = decompose_identity_background(op)
        assert len(plist) == 3
        for d in range(3, 8):
            T_op, T_sum = plist.truncate(d)
            assert fro(T_op - T_sum) <= 1e-8

    def test_with_surplus_and_unit_eigenspace(self, rng):
        U = random_unitary(4, rng)
        A = (U * np.array([2.5, 1.0, 0.75, 0.75])) @ U.conj().T
        plist = decompose_identity_background(A - np.eye(4))
        assert plist.background.rank == 1
        assert fro(plist.total() - A) < 1e-10

    def test_non_integer_surplus(self):
        with pytest.raises(ConditionFailed) as exc:
            decompose_identity_background(np.diag([2.0, -0.5]))
        assert exc.value.report.reason == "NonIntegerSurplus"

    def test_truncate_below_block(self):
        plist = decompose_identity_background(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            plist.truncate(2)


class TestVerify:
    def test_pass(self):
        assert verify_sum(np.eye(2), [np.diag([1.0, 0]), np.diag([0, 1.0])]).passed

    def test_two_by_two(self):
        cert = verify_sum(A2, [P_PLUS, P_MINUS])
        assert cert.passed and cert.sum_residual < 1e-12 and cert.idem_max < 1e-12

    def test_fail(self):
        cert = verify_sum(np.eye(2), [np.diag([1.0, 0])])
        assert not cert.passed
        assert cert.sum_residual == pytest.approx(1.0)

    def test_non_idempotent(self):
        cert = verify_sum(np.eye(2), [0.5 * np.eye(2), 0.5 * np.eye(2)])
        assert not cert.passed and cert.idem_max > 0.1

    def test_projection_objects(self):
        cert = verify_sum(np.eye(2), [Projection.from_vectors(np.eye(2))])
        assert cert.passed and cert.count == 1
