"""scikit-learn style wrappers around the functional API."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_hermitian
from .isotropic import zero_diagonal_resolution
from .linalg import EPS_ONE
from .projdecomp import decompose_fillmore, decompose_identity_background, verify_sum


def _square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("input contains NaN or infinity")
    return A.astype(complex)


class ProjectionSumDecomposer(BaseEstimator):
    """Fit a list of rank-one projections summing to a PSD matrix.

    ``mode="finite"`` needs integer trace >= rank; ``mode="identity-background"``
    treats the input as the finite block of an operator that is the identity
    elsewhere.
    """

    def __init__(self, tol=1e-8, eps_one=EPS_ONE, mode="finite"):
        self.tol = tol
        self.eps_one = eps_one
        self.mode = mode

    def fit(self, A, y=None):
        A = as_hermitian(_square(A))
        if self.mode == "finite":
            plist = decompose_fillmore(A)
        elif self.mode == "identity-background":
            plist = decompose_identity_background(A - np.eye(A.shape[0]), self.eps_one)
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.n_features_in_ = A.shape[0]
        self.decomposition_ = plist
        self.projections_ = [p.matrix for p in plist.projections]
        self.vectors_ = plist.vectors
        self.certificate_ = verify_sum(A, plist, self.tol)
        return self

    def reconstruct(self):
        check_is_fitted(self, "decomposition_")
        return self.decomposition_.total()


class ZeroDiagonalBasis(TransformerMixin, BaseEstimator):
    """Orthonormal basis in which a traceless Hermitian matrix has zero diagonal.

    ``transform(M)`` returns ``U* M U``; on the fitted matrix every diagonal
    entry vanishes.
    """

    def __init__(self, tol=1e-9):
        self.tol = tol

    def fit(self, X, y=None):
        X = as_hermitian(_square(X))
        res = zero_diagonal_resolution(X, tol=self.tol)
        self.n_features_in_ = X.shape[0]
        self.basis_ = res.basis
        self.resolution_ = res
        return self

    def transform(self, M):
        check_is_fitted(self, "basis_")
        M = _square(M)
        if M.shape[0] != self.n_features_in_:
            raise ValueError(f"expected a {self.n_features_in_}x{self.n_features_in_} matrix")
        U = self.basis_
        return U.conj().T @ M @ U

    def inverse_transform(self, M):
        check_is_fitted(self, "basis_")
        U = self.basis_
        return U @ _square(M) @ U.conj().T
