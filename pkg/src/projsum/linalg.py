"""Hermitian matrix foundation.

Eigendecomposition, spectral projections, PSD square roots, the
excess/defect split ``A = A+ - A- + R_A`` and the decomposability checks
for finite matrices and for spectral measures.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._validation import as_hermitian, fro, rank_tol
from .exceptions import NotPositive, NumericalFailure

EPS_ONE = 1e-9
INTEGER_TOL = 1e-8
PSD_TOL = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted descending with aligned orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_norm: float

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.conj().T

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))


def _fix_phases(Q, tiny=1e-10):
    # Make the first non-negligible component of each column real positive.
    Q = Q.copy()
    for j in range(Q.shape[1]):
        col = Q[:, j]
        idx = np.flatnonzero(np.abs(col) > tiny)
        if idx.size:
            z = col[idx[0]]
            Q[:, j] = col * (abs(z) / z)
    return Q


def _canonical_clusters(w, V, scale):
    # Degenerate eigenspaces have no preferred basis: replace each cluster's
    # vectors by Gram-Schmidt over its projections of e_1, e_2, ... in order.
    tol = 1e-12 * max(1.0, scale)
    n = len(w)
    V = V.copy()
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and w[stop - 1] - w[stop] <= tol:
            stop += 1
        k = stop - start
        if k > 1:
            block = V[:, start:stop]
            P = block @ block.conj().T
            basis = []
            for i in range(n):
                u = P[:, i].copy()
                for b in basis:
                    u -= np.vdot(b, u) * b
                for b in basis:
                    u -= np.vdot(b, u) * b
                nu = np.linalg.norm(u)
                if nu > 1e-2:
                    basis.append(u / nu)
                    if len(basis) == k:
                        break
            V[:, start:stop] = np.column_stack(basis)
        start = stop
    return V


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Sweeps over all pairs ``(p, q)`` annihilating ``A[p, q]`` with a unitary
    plane rotation until the off-diagonal Frobenius norm drops below
    ``tol * ||A||_F``. Returns ``(w, V)`` unsorted, with ``A = V diag(w) V*``.
    """
    a = np.array(A, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.linalg.norm(a) ** 2 - np.sum(np.abs(a.diagonal()) ** 2), 0.0))
        if off <= target:
            return a.diagonal().real.copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= target * 1e-3 / n:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2 * r)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ g
                a[cols, :] = g.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0
                v[:, cols] = v[:, cols] @ g
    raise NumericalFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def eig_hermitian(A, tol=1e-10, method="lapack"):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Within a repeated eigenvalue the basis is rebuilt from the standard basis
    vectors in index order, so the output does not depend on solver
    internals; eigenvector phases are normalised so the first non-negligible
    component is real positive. ``method`` is
    ``"lapack"`` (default) or ``"jacobi"``.

    Raises NumericalFailure if the reconstruction or orthonormality residual
    exceeds ``tol``.
    """
    A = as_hermitian(A)
    if method == "jacobi":
        w, V = jacobi_eigh(A)
    elif method == "lapack":
        w, V = np.linalg.eigh(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    w = np.asarray(w[order], dtype=float)
    V = _fix_phases(_canonical_clusters(w, V[:, order], float(np.max(np.abs(w)))))
    dec = SpectralDecomposition(w, V, float(np.max(np.abs(w))))
    n = A.shape[0]
    if fro(A - dec.reconstruct()) > tol * max(1.0, fro(A)):
        raise NumericalFailure("eigendecomposition reconstruction residual too large")
    if fro(V.conj().T @ V - np.eye(n)) > tol:
        raise NumericalFailure("eigenvectors not orthonormal")
    return dec


def _eig(A):
    # Eigendecomposition of an already-validated array, skipping re-validation.
    w, V = np.linalg.eigh(A)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    scale = float(np.max(np.abs(w)))
    return SpectralDecomposition(w, _fix_phases(_canonical_clusters(w, V[:, order], scale)), scale)


@dataclass(frozen=True)
class Projection:
    """An orthogonal projection together with its rank."""

    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        P = self.matrix
        if fro(P @ P - P) > 1e-9:
            raise NumericalFailure("matrix is not idempotent")
        if abs(np.trace(P).real - self.rank) > 1e-9:
            raise NumericalFailure("projection trace does not match its rank")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def n(self):
        return self.matrix.shape[0]

    @classmethod
    def from_vectors(cls, V, n=None):
        """Projection onto the span of orthonormal columns ``V``."""
        V = np.asarray(V, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[1] == 0:
            return cls.zero(n if n is not None else V.shape[0])
        P = V @ V.conj().T
        return cls(P, V.shape[1])

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, n), dtype=complex), 0)


@dataclass(frozen=True)
class Interval:
    """A real interval; ``hi=None`` means unbounded above."""

    lo: float
    hi: float | None = None
    lo_closed: bool = False
    hi_closed: bool = False

    def __contains__(self, x):
        above = x >= self.lo if self.lo_closed else x > self.lo
        if self.hi is None:
            return above
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def snap(self, x, eps):
        if abs(x - self.lo) <= eps:
            return self.lo
        if self.hi is not None and abs(x - self.hi) <= eps:
            return self.hi
        return x


EXCESS_INTERVAL = Interval(1.0, None)           # (1, ||A||]
DEFECT_INTERVAL = Interval(0.0, 1.0)             # (0, 1)


def spectral_projection(A, interval, eps_one=EPS_ONE, decomposition=None):
    """Sum of the eigenprojections of ``A`` for eigenvalues in ``interval``.

    Eigenvalues within ``eps_one`` of an interval endpoint are snapped onto
    the endpoint before membership is decided.
    """
    dec = decomposition if decomposition is not None else eig_hermitian(A)
    keep = [j for j, lam in enumerate(dec.eigenvalues) if interval.snap(lam, eps_one) in interval]
    return Projection.from_vectors(dec.eigenvectors[:, keep], n=len(dec.eigenvalues))


def _psd_decomposition(A):
    dec = eig_hermitian(A)
    w = dec.eigenvalues
    if w.size and w[-1] < -PSD_TOL:
        raise NotPositive(f"smallest eigenvalue {w[-1]:.3e} is negative")
    w = np.clip(w, 0.0, None)
    return SpectralDecomposition(w, dec.eigenvectors, float(w[0]) if w.size else 0.0)


@dataclass(frozen=True)
class ExcessDefectSplit:
    a_plus: np.ndarray
    a_minus: np.ndarray
    range_proj: Projection
    tau_plus: float
    tau_minus: float
    tau_range: float

    @property
    def surplus(self):
        return self.tau_plus - self.tau_minus


def excess_defect_split(A, eps_one=EPS_ONE, decomposition=None):
    """Split a PSD matrix as ``A = A+ - A- + R_A``.

    ``A+ = (A - I) chi(1, ||A||]``, ``A- = (I - A) chi(0, 1)`` and ``R_A`` is
    the range projection. Eigenvalues in ``[1 - eps_one, 1 + eps_one]`` count
    as exactly 1; those at or below the rank floor count as 0.
    """
    dec = decomposition if decomposition is not None else _psd_decomposition(A)
    w, Q = dec.eigenvalues, dec.eigenvectors
    floor = rank_tol(dec.source_norm)
    plus = w > 1 + eps_one
    minus = (w > floor) & (w < 1 - eps_one)
    rng = w > floor
    a_plus = (Q[:, plus] * (w[plus] - 1)) @ Q[:, plus].conj().T
    a_minus = (Q[:, minus] * (1 - w[minus])) @ Q[:, minus].conj().T
    return ExcessDefectSplit(
        a_plus=a_plus,
        a_minus=a_minus,
        range_proj=Projection.from_vectors(Q[:, rng], n=len(w)),
        tau_plus=float(np.sum(w[plus] - 1)),
        tau_minus=float(np.sum(1 - w[minus])),
        tau_range=float(np.count_nonzero(rng)),
    )


def sqrt_psd(A):
    """Positive square root of a PSD matrix."""
    dec = _psd_decomposition(A)
    Q = dec.eigenvectors
    return (Q * np.sqrt(dec.eigenvalues)) @ Q.conj().T


def psd_rank(A):
    dec = _psd_decomposition(A)
    return int(np.count_nonzero(dec.eigenvalues > rank_tol(dec.source_norm)))


class Reason(str, Enum):
    NOT_POSITIVE = "NotPositive"
    NON_INTEGER_TRACE = "NonIntegerTrace"
    TRACE_BELOW_RANK = "TraceBelowRank"
    NON_INTEGER_SURPLUS = "NonIntegerSurplus"
    NEGATIVE_SURPLUS = "NegativeSurplus"
    EXCESS_BELOW_DEFECT = "ExcessBelowDefect"


MODES = ("matrix-finite", "matrix-identity-background", "measure-II1", "measure-IIinf")


@dataclass(frozen=True)
class ConditionReport:
    mode: str
    decomposable: bool
    reason: str = ""
    witness: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.decomposable == bool(self.reason):
            raise ValueError("reason must be set exactly when the input is rejected")

    def to_dict(self):
        return {
            "mode": self.mode,
            "decomposable": self.decomposable,
            "reason": self.reason,
            "witness": {k: _jsonable(v) for k, v in self.witness.items()},
        }


def _jsonable(v):
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


def _nearest_integer(x, tol=INTEGER_TOL):
    k = round(x)
    return int(k) if abs(x - k) <= tol else None


def check_decomposable(A, mode="matrix-finite", eps_one=EPS_ONE):
    """Decide whether ``A`` is a sum of projections in the given setting.

    ``matrix-finite``: positivity, integer trace, trace >= rank.
    ``matrix-identity-background``: ``A`` is the finite block of an operator
    that is the identity elsewhere; the surplus ``Tr(A+) - Tr(A-)`` must be a
    nonnegative integer. ``measure-II1`` / ``measure-IIinf``: ``A`` is a
    :class:`~projsum.measure.SpectralMeasure` and ``tau(A+) >= tau(A-)``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode.startswith("measure"):
        from .measure import functional_traces

        ft = functional_traces(A)
        witness = {"tau_plus": ft.tau_plus, "tau_minus": ft.tau_minus}
        if ft.tau_plus < ft.tau_minus:
            return ConditionReport(mode, False, Reason.EXCESS_BELOW_DEFECT.value, witness)
        return ConditionReport(mode, True, "", witness)

    try:
        dec = _psd_decomposition(A)
    except NotPositive:
        lam = float(np.linalg.eigvalsh(as_hermitian(A))[0])
        return ConditionReport(mode, False, Reason.NOT_POSITIVE.value, {"min_eigenvalue": lam})

    if mode == "matrix-finite":
        trace = float(np.sum(dec.eigenvalues))
        rank = int(np.count_nonzero(dec.eigenvalues > rank_tol(dec.source_norm)))
        witness = {"trace": trace, "rank": rank}
        T = _nearest_integer(trace)
        if T is None:
            return ConditionReport(mode, False, Reason.NON_INTEGER_TRACE.value, witness)
        if T < rank:
            return ConditionReport(mode, False, Reason.TRACE_BELOW_RANK.value, witness)
        return ConditionReport(mode, True, "", witness)

    split = excess_defect_split(A, eps_one, decomposition=dec)
    witness = {"tau_plus": split.tau_plus, "tau_minus": split.tau_minus, "surplus": split.surplus}
    S = _nearest_integer(split.surplus)
    if S is None:
        return ConditionReport(mode, False, Reason.NON_INTEGER_SURPLUS.value, witness)
    if S < 0:
        return ConditionReport(mode, False, Reason.NEGATIVE_SURPLUS.value, witness)
    return ConditionReport(mode, True, "", witness)
