"""Input validation helpers shared by the numerical modules and estimators."""

import numpy as np

from .exceptions import InputError, NotHermitian

HERMITIAN_TOL = 1e-12


def check_square(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be a square 2-d array, got shape {A.shape}")
    if A.shape[0] == 0:
        raise InputError(f"{name} must have positive dimension")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite entries")
    return A


def as_hermitian(A, tol=HERMITIAN_TOL, name="A"):
    """Return ``A`` as a complex Hermitian array.

    The asymmetry ``max |A - A*|`` must not exceed ``tol`` times
    ``max(1, max |A_ij|)``. The result is exactly Hermitian: it is the
    Hermitian part of the input with a real diagonal.
    """
    A = check_square(A, name).astype(complex)
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.conj().T)))
    if asym > tol * scale:
        raise NotHermitian(f"{name} is not Hermitian (max asymmetry {asym:.3e})")
    H = (A + A.conj().T) / 2
    H[np.diag_indices_from(H)] = H.diagonal().real
    return H


def fro(A):
    return float(np.linalg.norm(A, "fro"))


def rank_tol(norm):
    """Noise floor below which an eigenvalue counts as zero."""
    return 1e-9 * max(1.0, norm)
