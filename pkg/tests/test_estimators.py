import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import fro, random_hermitian
from projsum.estimators import ProjectionSumDecomposer, ZeroDiagonalBasis
from projsum.exceptions import ConditionFailed
from projsum.generators import fillmore_matrix


class TestDecomposer:
    def test_fit(self):
        est = ProjectionSumDecomposer().fit(np.diag([2.0, 1.0, 0.0]))
        assert len(est.projections_) == 3
        assert est.certificate_.passed
        assert fro(est.reconstruct() - np.diag([2, 1, 0])) < 1e-12

    def test_params(self):
        est = ProjectionSumDecomposer(tol=1e-6, mode="identity-background")
        assert est.get_params() == {"tol": 1e-6, "eps_one": 1e-9, "mode": "identity-background"}
        assert clone(est).get_params() == est.get_params()

    def test_identity_background(self):
        est = ProjectionSumDecomposer(mode="identity-background").fit(np.diag([2.0, 0.5, 0.5]))
        assert est.certificate_.passed and len(est.projections_) == 3

    def test_rejects(self):
        with pytest.raises(ConditionFailed):
            ProjectionSumDecomposer().fit(np.diag([0.5, 0.5]))
        with pytest.raises(ValueError):
            ProjectionSumDecomposer().fit(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            ProjectionSumDecomposer(mode="other").fit(np.eye(2))

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ProjectionSumDecomposer().reconstruct()

    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_vectors_match_projections(self, n, seed):
        est = ProjectionSumDecomposer().fit(fillmore_matrix(n, seed))
        for v, P in zip(est.vectors_.T, est.projections_):
            u = v / np.linalg.norm(v)
            assert fro(np.outer(u, u.conj()) - P) < 1e-12


class TestZeroDiagonalBasis:
    def test_transform_has_zero_diagonal(self, rng):
        X = random_hermitian(6, rng)
        X -= np.trace(X).real / 6 * np.eye(6)
        est = ZeroDiagonalBasis().fit(X)
        Y = est.transform(X)
        assert np.max(np.abs(np.diagonal(Y))) < 1e-12
        assert fro(est.inverse_transform(Y) - X) < 1e-12

    def test_fit_transform(self):
        Y = ZeroDiagonalBasis().fit_transform(np.diag([1.0, -1.0]))
        assert np.allclose(np.diagonal(Y), 0)

    def test_not_fitted_and_shape(self):
        with pytest.raises(NotFittedError):
            ZeroDiagonalBasis().transform(np.eye(2))
        est = ZeroDiagonalBasis().fit(np.diag([1.0, -1.0]))
        with pytest.raises(ValueError):
            est.transform(np.eye(3))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            ZeroDiagonalBasis().fit(np.array([[np.nan, 0], [0, 0]]))
