"""Sums of projections for PSD matrices.

The central equivalence: a resolution ``I = sum E_j`` into mutually
orthogonal projections with ``E_j A E_j = E_j`` turns into projections
``P_j = A^{1/2} E_j A^{1/2}`` summing to ``A`` (flatten), and conversely a
list of projections summing to ``A`` lifts back to such a resolution
(through a polar factorisation). On top of that sit the unit-trace case,
the Fillmore case (integer trace >= rank) and the identity-background case.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_hermitian, fro, rank_tol
from .exceptions import ConditionFailed, NotFlat, NotSum, TraceMismatch
from .isotropic import IsotropicResolution, range_basis, zero_diagonal_resolution
from .linalg import (
    EPS_ONE,
    Projection,
    _psd_decomposition,
    check_decomposable,
    sqrt_psd,
)

TRACE_TOL = 1e-8
FLAT_TOL = 1e-8


@dataclass(frozen=True)
class ProjectionList:
    """Projections whose sum is ``target``.

    ``vectors`` (columns) are set when every projection is rank one, with
    ``P_j = v_j v_j*``. ``background`` is set only for identity-background
    decompositions: it is the finite block of the projection onto the unit
    eigenspace, which together with the identity outside the finite block is
    fixed by the operator.
    """

    projections: list
    target: np.ndarray
    vectors: np.ndarray | None = None
    background: Projection | None = None
    mode: str = "finite"

    def __len__(self):
        return len(self.projections)

    def __iter__(self):
        return iter(self.projections)

    @property
    def n(self):
        return self.target.shape[0]

    def total(self):
        S = np.zeros((self.n, self.n), dtype=complex)
        for p in self.projections:
            S = S + p.matrix
        if self.background is not None:
            S = S + self.background.matrix
        return S

    def truncate(self, d):
        """Compress operator and sum onto the first ``d >= n`` coordinates.

        Outside the finite block the operator is the identity, and so is the
        background contribution.
        """
        m = self.n
        if d < m:
            raise ValueError(f"truncation dimension {d} is below the finite block size {m}")
        op = np.eye(d, dtype=complex)
        op[:m, :m] = self.target
        total = np.eye(d, dtype=complex)
        total[:m, :m] = self.total()
        return op, total


@dataclass(frozen=True)
class IsometryAssembly:
    """Partial isometries ``W_j`` with ``W_j* W_j = P_j`` and ``W_j W_j* = F_j``."""

    w_list: list
    f_list: list
    b: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class IdentityBackgroundOperator:
    """``A = (I + X) (+) I`` on a finite block plus an infinite complement."""

    finite_part: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "finite_part", as_hermitian(self.finite_part, name="X"))

    @classmethod
    def from_block(cls, A):
        """Build from the finite block of ``A`` itself rather than of ``A - I``."""
        A = as_hermitian(A)
        return cls(A - np.eye(A.shape[0]))

    @property
    def block(self):
        return self.finite_part + np.eye(self.finite_part.shape[0])


def _rank_one(vectors):
    # Exact rank-one projections onto the directions of the given columns.
    out = []
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        out.append(Projection.from_vectors(v / np.linalg.norm(v)))
    return out


def flatten_to_projections(A, res):
    """``P_j = A^{1/2} E_j A^{1/2}`` for a resolution with ``E_j A E_j = E_j``."""
    A = as_hermitian(A)
    n = A.shape[0]
    if res.n != n:
        raise ValueError("resolution and matrix dimensions differ")
    for j, p in enumerate(res.projections):
        E = p.matrix
        if fro(E @ A @ E - E) > FLAT_TOL:
            raise NotFlat(f"E_{j} A E_{j} != E_{j}")
    if fro(sum(p.matrix for p in res.projections) - np.eye(n)) > FLAT_TOL:
        raise NotFlat("resolution does not sum to the identity")
    S = sqrt_psd(A)
    if res.basis is not None:
        W = S @ res.basis
        return ProjectionList(_rank_one(W), A, vectors=W)
    projs = []
    for p in res.projections:
        P = S @ p.matrix @ S
        projs.append(Projection((P + P.conj().T) / 2, p.rank))
    return ProjectionList(projs, A)


def resolution_from_projections(A, plist):
    """Lift projections summing to ``A`` (with ``trace A = n``) to a flat resolution.

    Stacks coordinate blocks ``F_j`` with ``rank F_j = rank P_j``, maps
    ``range(P_j)`` onto ``range(F_j)`` by ``W_j``, factors ``B = sum W_j`` as
    ``V A^{1/2}`` and returns ``E_j = V* F_j V`` with the assembly.
    """
    A = as_hermitian(A)
    n = A.shape[0]
    mats = [np.asarray(p.matrix if isinstance(p, Projection) else p, dtype=complex) for p in plist]
    if abs(np.trace(A).real - n) > TRACE_TOL * max(1, n):
        raise TraceMismatch(f"trace(A) = {np.trace(A).real:.12g} differs from the dimension {n}")
    if fro(sum(mats, np.zeros((n, n), complex)) - A) > TRACE_TOL * max(1.0, fro(A)):
        raise NotSum("projections do not sum to A")

    w_list, f_list = [], []
    offset = 0
    B = np.zeros((n, n), dtype=complex)
    for P in mats:
        U = range_basis(P)
        r = U.shape[1]
        W = np.zeros((n, n), dtype=complex)
        W[offset:offset + r, :] = U.conj().T
        F = np.zeros((n, n), dtype=complex)
        F[range(offset, offset + r), range(offset, offset + r)] = 1
        w_list.append(W)
        f_list.append(F)
        B += W
        offset += r
    if offset != n:
        raise TraceMismatch(f"projection ranks sum to {offset}, expected {n}")

    U_, _, Vh = np.linalg.svd(B)
    V = U_ @ Vh
    Vs = V.conj().T
    projs, ranks = [], []
    offset = 0
    for F in f_list:
        r = int(round(np.trace(F).real))
        cols = Vs[:, offset:offset + r]
        projs.append(Projection.from_vectors(cols))
        ranks.append(r)
        offset += r
    basis = Vs if all(r == 1 for r in ranks) else None
    res = IsotropicResolution(projs, A - np.eye(n), basis)
    for j, p in enumerate(projs):
        E = p.matrix
        if fro(E @ A @ E - E) > FLAT_TOL:
            raise NotFlat(f"lifted E_{j} is not flat for A")
    return res, IsometryAssembly(w_list, f_list, B, V)


def decompose_unit_trace(A):
    """``trace A = n``: exactly ``n`` rank-one projections summing to ``A``."""
    A = as_hermitian(A)
    n = A.shape[0]
    _psd_decomposition(A)
    tr = np.trace(A).real
    if abs(tr - n) > TRACE_TOL:
        raise TraceMismatch(f"trace(A) = {tr:.12g} differs from the dimension {n}")
    res = zero_diagonal_resolution(A - np.eye(n), tol=TRACE_TOL)
    return flatten_to_projections(A, res)


def decompose_fillmore(A):
    """Write a PSD matrix with integer trace ``T >= rank`` as ``T`` rank-one projections.

    Works on the range of ``A``: while the trace exceeds the rank, peel the
    top eigenvector (its eigenvalue is > 1 there, so the rest stays PSD and
    keeps its rank), then finish the unit-trace remainder.
    """
    A = as_hermitian(A)
    report = check_decomposable(A, "matrix-finite")
    if not report.decomposable:
        raise ConditionFailed(f"not a sum of projections: {report.reason}", report)
    n = A.shape[0]
    dec = _psd_decomposition(A)
    keep = dec.eigenvalues > rank_tol(dec.source_norm)
    w = dec.eigenvalues[keep].copy()
    Q = dec.eigenvectors[:, keep]
    r = w.size
    T = int(round(float(np.sum(dec.eigenvalues))))

    vectors = []
    for _ in range(T - r):
        j = int(np.argmax(w))
        vectors.append(Q[:, j])
        w[j] -= 1.0
    if r:
        base = decompose_unit_trace(np.diag(w))
        vectors.extend(Q @ base.vectors[:, i] for i in range(base.vectors.shape[1]))
    V = np.column_stack(vectors) if vectors else np.zeros((n, 0), dtype=complex)
    return ProjectionList(_rank_one(V), A, vectors=V)


def decompose_identity_background(op, eps_one=EPS_ONE):
    """Decompose ``A = (I + X) (+) I`` with integer surplus ``Tr(A+) - Tr(A-)``.

    Peels top eigenvectors until the surplus is zero, resolves the traceless
    non-unit part ``A+ - A-`` into a zero-diagonal basis of its support and
    flattens with ``A^{1/2}``. The unit eigenspace is returned as the
    ``background`` block.
    """
    if not isinstance(op, IdentityBackgroundOperator):
        op = IdentityBackgroundOperator(op)
    A = op.block
    m = A.shape[0]
    report = check_decomposable(A, "matrix-identity-background", eps_one)
    if not report.decomposable:
        raise ConditionFailed(f"not a sum of projections: {report.reason}", report)
    dec = _psd_decomposition(A)
    w = dec.eigenvalues.copy()
    Q = dec.eigenvectors
    floor = rank_tol(dec.source_norm)
    surplus = int(round(report.witness["surplus"]))

    vectors = []
    for _ in range(surplus):
        j = int(np.argmax(w))
        vectors.append(Q[:, j])
        w[j] -= 1.0

    unit = np.abs(w - 1) <= eps_one
    support = ~unit & (w > floor)
    if support.any():
        Qs = Q[:, support]
        ws = w[support]
        res = zero_diagonal_resolution(np.diag(ws - 1), tol=TRACE_TOL)
        W = Qs @ (np.sqrt(ws)[:, None] * res.basis)
        vectors.extend(W[:, i] for i in range(W.shape[1]))
    V = np.column_stack(vectors) if vectors else np.zeros((m, 0), dtype=complex)
    background = Projection.from_vectors(Q[:, unit], n=m)
    return ProjectionList(_rank_one(V), A, vectors=V, background=background, mode="identity-background")


@dataclass(frozen=True)
class Certificate:
    """Residuals of a claimed decomposition; ``passed`` iff all are within ``tol``.

    The reconstruction residual is compared against ``tol * max(1, ||A||_F)``.
    """

    target: np.ndarray
    projections: list
    idem: list
    herm: list
    sum_residual: float
    tol: float
    mode: str = "finite"
    background: np.ndarray | None = None
    passed: bool = field(init=False)

    def __post_init__(self):
        ok = (
            self.sum_residual <= self.tol * max(1.0, fro(self.target))
            and max(self.idem, default=0.0) <= self.tol
            and max(self.herm, default=0.0) <= self.tol
        )
        object.__setattr__(self, "passed", bool(ok))

    @property
    def count(self):
        return len(self.projections)

    @property
    def idem_max(self):
        return max(self.idem, default=0.0)

    @property
    def herm_max(self):
        return max(self.herm, default=0.0)


def verify_sum(A, plist, tol=1e-8):
    """Check that ``plist`` is a list of projections summing to ``A``."""
    A = np.asarray(A, dtype=complex)
    background = None
    mode = "finite"
    if isinstance(plist, ProjectionList):
        mode = plist.mode
        if plist.background is not None:
            background = plist.background.matrix
        mats = [p.matrix for p in plist.projections]
    else:
        mats = [np.asarray(p.matrix if isinstance(p, Projection) else p, dtype=complex) for p in plist]
    total = np.zeros_like(A)
    for P in mats:
        total = total + P
    if background is not None:
        total = total + background
    return Certificate(
        target=A,
        projections=mats,
        idem=[fro(P @ P - P) for P in mats],
        herm=[fro(P - P.conj().T) for P in mats],
        sum_residual=fro(total - A),
        tol=tol,
        mode=mode,
        background=background,
    )
