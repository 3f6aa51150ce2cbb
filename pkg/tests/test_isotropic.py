import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fro, random_hermitian
from projsum.exceptions import (
    Definite,
    NotIsotropicWitness,
    NotSymmetry,
    NotTraceless,
    ZeroMatrix,
)
from projsum.isotropic import (
    compress,
    householder_complement,
    isotropic_vector,
    support_reduction,
    symmetry_isotropic,
    zero_diagonal_resolution,
)

S2 = np.sqrt(2)


def traceless(n, rng):
    X = random_hermitian(n, rng)
    return X - np.trace(X).real / n * np.eye(n)


class TestSymmetry:
    def test_two_by_two(self):
        E = symmetry_isotropic(np.diag([1.0, -1.0]))
        assert np.allclose(E.matrix, 0.5 * np.ones((2, 2)))

    def test_pairs_by_index(self):
        E = symmetry_isotropic(np.diag([1.0, 1.0, -1.0]))
        v = np.array([1, 0, 1]) / S2
        assert E.rank == 1
        assert np.allclose(E.matrix, np.outer(v, v))
        U = np.diag([1.0, 1.0, -1.0])
        assert fro(E.matrix @ U @ E.matrix) < 1e-14

    def test_definite(self):
        with pytest.raises(Definite):
            symmetry_isotropic(np.eye(2))
        with pytest.raises(Definite):
            symmetry_isotropic(-np.eye(2))

    def test_not_symmetry(self):
        with pytest.raises(NotSymmetry):
            symmetry_isotropic(np.diag([1.0, 0.5]))


class TestIsotropicVector:
    def test_two_by_two(self):
        xi = isotropic_vector(np.diag([1.0, -1.0]))
        assert np.allclose(np.abs(xi), [1 / S2, 1 / S2])

    def test_three(self):
        xi = isotropic_vector(np.diag([2.0, -1.0, -1.0]))
        assert np.allclose(xi, np.array([1, S2, 0]) / np.sqrt(3))
        # quadratic form evaluated by hand: (2*1 - 1*2)/3
        assert abs(np.vdot(xi, np.diag([2, -1, -1]) @ xi)) < 1e-15

    def test_kernel_shortcut(self):
        xi = isotropic_vector(np.diag([5.0, -2.0, -3.0, 0.0]))
        assert np.allclose(np.abs(xi), [0, 0, 0, 1])

    def test_errors(self):
        with pytest.raises(ZeroMatrix):
            isotropic_vector(np.zeros((2, 2)))
        with pytest.raises(NotTraceless):
            isotropic_vector(np.diag([1.0, 1.0]))

    @given(st.integers(2, 12), st.integers(0, 2**32 - 1))
    def test_random_is_isotropic_unit(self, n, seed):
        X = traceless(n, np.random.default_rng(seed))
        xi = isotropic_vector(X)
        assert abs(np.linalg.norm(xi) - 1) < 1e-12
        assert abs(np.vdot(xi, X @ xi)) <= 1e-10 * max(1, fro(X))


class TestSupportReduction:
    X = np.array([[0.0, 1.0], [1.0, 0.0]])

    def test_diagonal_witness(self):
        E = support_reduction(np.diag([1.0, 0.0]), self.X)
        assert np.allclose(E.matrix, np.diag([1, 0]))

    def test_row_vector(self):
        v = np.array([1.0, 0.0])
        E = support_reduction(v[None, :], self.X)
        assert np.allclose(E.matrix, np.outer(v, v))

    def test_unitary_witness_with_zero_x(self):
        E = support_reduction(np.eye(3), np.zeros((3, 3)))
        assert np.allclose(E.matrix, np.eye(3))

    def test_errors(self):
        with pytest.raises(ZeroMatrix):
            support_reduction(np.zeros((2, 2)), self.X)
        with pytest.raises(NotIsotropicWitness):
            support_reduction(np.eye(2), self.X)


class TestCompress:
    def test_identity(self, rng):
        X = random_hermitian(4, rng)
        C = compress(X, np.eye(4))
        assert np.allclose(np.linalg.eigvalsh(C), np.linalg.eigvalsh(X))

    def test_one_dim(self):
        C = compress(np.diag([1.0, -1.0, 0.0]), np.diag([0.0, 0.0, 1.0]))
        assert C.shape == (1, 1) and abs(C[0, 0]) < 1e-15

    def test_trace_identity(self, rng):
        X = random_hermitian(5, rng)
        Q, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        F = Q @ Q.T
        assert np.trace(compress(X, F)).real == pytest.approx(np.trace(X @ F).real)


def test_householder_complement(rng):
    xi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    xi /= np.linalg.norm(xi)
    C = householder_complement(xi)
    assert C.shape == (5, 4)
    assert fro(C.conj().T @ C - np.eye(4)) < 1e-14
    assert np.linalg.norm(C.conj().T @ xi) < 1e-14


class TestZeroDiagonal:
    def test_zero(self):
        res = zero_diagonal_resolution(np.zeros((3, 3)))
        assert np.allclose(np.abs(res.basis), np.eye(3))

    def test_two_by_two(self):
        res = zero_diagonal_resolution(np.diag([1.0, -1.0]))
        assert np.allclose(np.abs(res.basis), np.full((2, 2), 1 / S2))
        assert np.allclose(res.quadratic_forms(), 0)

    def test_random_eight(self, rng):
        X = traceless(8, rng)
        res = zero_diagonal_resolution(X)
        iso, total, orth = res.residuals()
        assert len(res) == 8
        assert iso < 1e-12 and total < 1e-12 and orth < 1e-12

    def test_rejects_trace(self):
        with pytest.raises(NotTraceless):
            zero_diagonal_resolution(np.eye(2))

    @given(st.integers(1, 16), st.integers(0, 2**32 - 1), st.booleans())
    def test_property(self, n, seed, complex_):
        rng = np.random.default_rng(seed)
        X = random_hermitian(n, rng, complex_)
        X -= np.trace(X).real / n * np.eye(n)
        res = zero_diagonal_resolution(X)
        B = res.basis
        # independent oracle: diagonal of U* X U and unitarity of U
        diag = np.diagonal(B.conj().T @ X @ B)
        assert len(res) == n
        assert np.max(np.abs(diag)) <= 1e-9 * max(1, np.linalg.norm(X, 2))
        assert fro(B @ B.conj().T - np.eye(n)) <= 1e-8

    def test_low_rank_traceless(self):
        X = np.zeros((5, 5))
        X[0, 0], X[1, 1] = 1.0, -1.0
        res = zero_diagonal_resolution(X)
        assert np.max(np.abs(res.quadratic_forms())) < 1e-14
