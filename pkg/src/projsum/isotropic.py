"""Isotropic vectors and zero-diagonal resolutions of the identity.

A unit vector ``xi`` is isotropic for a Hermitian ``X`` when
``<X xi, xi> = 0``. A traceless ``X`` always has one, and deflating onto its
orthogonal complement leaves a compression that is again traceless, so
repeating the step produces an orthonormal basis in which ``X`` has zero
diagonal.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_hermitian, fro, rank_tol
from .exceptions import (
    Definite,
    NotIsotropicWitness,
    NotSymmetry,
    NotTraceless,
    ZeroMatrix,
)
from .linalg import Projection, _eig, eig_hermitian

TRACE_TOL = 1e-9


@dataclass(frozen=True)
class IsotropicResolution:
    """Mutually orthogonal projections summing to I, each isotropic for ``target``.

    ``basis`` holds the orthonormal vectors as columns when every projection
    has rank one (always the case for :func:`zero_diagonal_resolution`).
    """

    projections: list
    target: np.ndarray
    basis: np.ndarray | None = None

    @classmethod
    def from_basis(cls, basis, target):
        basis = np.asarray(basis, dtype=complex)
        projs = [Projection.from_vectors(basis[:, j]) for j in range(basis.shape[1])]
        return cls(projs, np.asarray(target), basis)

    def __len__(self):
        return len(self.projections)

    @property
    def n(self):
        return self.target.shape[0]

    def residuals(self):
        """``(max_j ||E_j X E_j||_F, ||sum E_j - I||_F, max_{i!=j} ||E_i E_j||_F)``."""
        X = self.target
        mats = [p.matrix for p in self.projections]
        iso = max((fro(E @ X @ E) for E in mats), default=0.0)
        total = fro(sum(mats, np.zeros_like(X, dtype=complex)) - np.eye(self.n))
        if self.basis is not None:
            G = self.basis.conj().T @ self.basis
            orth = float(np.max(np.abs(G - np.diag(G.diagonal())), initial=0.0))
        else:
            orth = max(
                (fro(mats[i] @ mats[j]) for i in range(len(mats)) for j in range(i + 1, len(mats))),
                default=0.0,
            )
        return iso, total, orth

    def quadratic_forms(self):
        if self.basis is None:
            raise ValueError("quadratic forms need a rank-one resolution")
        B = self.basis
        return np.einsum("ij,ik,kj->j", B.conj(), self.target, B).real


def symmetry_isotropic(U):
    """Nonzero projection ``E`` with ``EUE = 0`` for a self-adjoint unitary ``U``.

    Pairs the k-th +1 eigenvector ``e_k`` with the k-th -1 eigenvector
    ``f_k`` and spans ``(e_k + f_k)/sqrt(2)``; the rank is the smaller of the
    two multiplicities.
    """
    U = as_hermitian(U, name="U")
    n = U.shape[0]
    if fro(U @ U - np.eye(n)) > 1e-9:
        raise NotSymmetry("U is not a self-adjoint unitary (U^2 != I)")
    dec = eig_hermitian(U)
    plus = dec.eigenvectors[:, dec.eigenvalues > 0]
    minus = dec.eigenvectors[:, dec.eigenvalues < 0]
    k = min(plus.shape[1], minus.shape[1])
    if k == 0:
        raise Definite("U = +I or -I has no isotropic projection")
    return Projection.from_vectors((plus[:, :k] + minus[:, :k]) / np.sqrt(2))


def isotropic_vector(X, tol=TRACE_TOL, _checked=False):
    """Unit vector ``xi`` with ``<X xi, xi> = 0`` for a traceless Hermitian ``X``.

    Uses a kernel vector if ``X`` has one. Otherwise mixes the eigenvectors
    ``e`` (largest eigenvalue ``lam > 0``) and ``f`` (most negative ``mu``):
    ``xi = (sqrt(-mu) e + sqrt(lam) f) / sqrt(lam - mu)``.
    """
    if not _checked:
        X = as_hermitian(X, name="X")
        if abs(np.trace(X).real) > tol * max(1.0, fro(X)):
            raise NotTraceless(f"trace {np.trace(X).real:.3e} is not zero")
    dec = _eig(X)
    w, Q = dec.eigenvalues, dec.eigenvectors
    if dec.source_norm == 0.0:
        raise ZeroMatrix("X = 0; every vector is isotropic")
    kernel = np.flatnonzero(np.abs(w) <= rank_tol(dec.source_norm))
    if kernel.size:
        return Q[:, kernel[0]].copy()
    lam = w[0]
    j = int(np.flatnonzero(w == w[-1])[0])
    mu = w[j]
    if lam <= 0 or mu >= 0:
        raise NotTraceless("X is definite, so it has no isotropic vector")
    return (np.sqrt(-mu) * Q[:, 0] + np.sqrt(lam) * Q[:, j]) / np.sqrt(lam - mu)


def support_reduction(Y, X):
    """Turn a witness ``Y != 0`` with ``Y X Y* = 0`` into a projection ``E`` with ``EXE = 0``.

    ``E`` is the projection onto ``range(Y*)``.
    """
    X = as_hermitian(X, name="X")
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    if Y.shape[1] != X.shape[0]:
        raise ValueError(f"Y has {Y.shape[1]} columns, X has dimension {X.shape[0]}")
    _, s, Vh = np.linalg.svd(Y)
    if s.size == 0 or s[0] == 0.0:
        raise ZeroMatrix("Y = 0")
    r = int(np.count_nonzero(s > rank_tol(s[0])))
    if r == 0:
        raise ZeroMatrix("Y is numerically zero")
    if fro(Y @ X @ Y.conj().T) > 1e-9 * max(1.0, fro(X) * s[0] ** 2):
        raise NotIsotropicWitness("Y X Y* != 0")
    return Projection.from_vectors(Vh[:r].conj().T)


def range_basis(F):
    """Orthonormal basis (columns) of the range of a projection."""
    dec = _eig(np.asarray(F, dtype=complex))
    return dec.eigenvectors[:, dec.eigenvalues > 0.5]


def compress(X, F):
    """Matrix of ``FXF`` on an orthonormal basis of ``range(F)``."""
    X = np.asarray(X, dtype=complex)
    V = range_basis(np.asarray(F))
    C = V.conj().T @ X @ V
    return (C + C.conj().T) / 2


def householder_complement(xi):
    """Orthonormal basis (columns) of the orthogonal complement of unit ``xi``.

    Columns 2..k of the reflector ``H = I - 2vv*/(v*v)`` with
    ``v = xi + (xi_1/|xi_1|) e_1``, which maps ``xi`` onto a multiple of ``e_1``.
    """
    k = xi.shape[0]
    a = xi[0]
    phase = a / abs(a) if abs(a) > 0 else 1.0
    v = xi.astype(complex)
    v[0] += phase
    H = np.eye(k, dtype=complex) - (2 / np.vdot(v, v).real) * np.outer(v, v.conj())
    return H[:, 1:]


def zero_diagonal_resolution(X, tol=TRACE_TOL):
    """Orthonormal basis ``xi_1..xi_n`` with ``<X xi_i, xi_i> = 0`` for all i.

    Greedy: pick an isotropic vector, deflate to its complement with a
    Householder basis, recurse on the (still traceless) compression. A
    compression that is numerically zero is finished with its own basis.
    """
    X = as_hermitian(X, name="X")
    n = X.shape[0]
    scale = max(1.0, fro(X))
    if abs(np.trace(X).real) > tol * scale:
        raise NotTraceless(f"trace {np.trace(X).real:.3e} is not zero")
    floor = 1e-14 * scale
    Q = np.eye(n, dtype=complex)
    M = X
    vectors = []
    while Q.shape[1] > 1:
        if fro(M) <= floor:
            break
        xi = isotropic_vector(M, _checked=True)
        vectors.append(Q @ xi)
        C = householder_complement(xi)
        Q = Q @ C
        M = C.conj().T @ M @ C
        M = (M + M.conj().T) / 2
    basis = np.column_stack(vectors + [Q[:, j] for j in range(Q.shape[1])])
    return IsotropicResolution.from_basis(basis, X)
