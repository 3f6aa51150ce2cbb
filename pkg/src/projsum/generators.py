"""Seeded test instances.

Every generator takes an integer seed and draws from ``numpy.random.default_rng``
(PCG64), so instances are reproducible across runs and platforms.
"""

from collections import Counter
from fractions import Fraction

import numpy as np

from .measure import SpectralMeasure, functional_traces

RNG_NAME = "numpy.random.PCG64"
MAX_N = 64
KINDS = ("fillmore-matrix", "traceless", "balanced-measure", "surplus-measure", "ii1-dyadic")


def _rng(seed):
    return np.random.default_rng(seed)


def random_unitary(n, rng):
    """Haar unitary: QR of a complex Gaussian with the phases of R divided out."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def _check_n(n):
    if not 1 <= n <= MAX_N:
        raise ValueError(f"matrix size must be in [1, {MAX_N}], got {n}")


def fillmore_matrix(n, seed, rank=None):
    """PSD matrix with integer trace ``T`` and ``rank <= T <= 3n``.

    Samples the nonzero eigenvalues, then moves the top one so that the
    trace lands on an integer drawn from the admissible range.
    """
    _check_n(n)
    rng = _rng(seed)
    r = int(rng.integers(1, n + 1)) if rank is None else rank
    w = rng.uniform(0.1, 2.0, size=r)
    w[::-1].sort()
    rest = float(w[1:].sum())
    T_min = max(r, int(np.floor(rest)) + 1)
    T = int(rng.integers(T_min, max(T_min, 3 * n) + 1))
    w[0] = T - rest
    lam = np.zeros(n)
    lam[:r] = w
    U = random_unitary(n, rng)
    A = (U * lam) @ U.conj().T
    return (A + A.conj().T) / 2


def traceless(n, seed):
    _check_n(n)
    rng = _rng(seed)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    X = (G + G.conj().T) / 2
    X -= np.trace(X).real / n * np.eye(n)
    return X


def _dyadic(rng, lo, hi, bits=3):
    # Uniform dyadic rational in the open interval (lo, hi) with denominator 2**bits.
    q = 2**bits
    j = int(rng.integers(lo * q + 1, hi * q))
    return Fraction(j, q)


def _random_atoms(rng, n_plus, n_minus):
    atoms = Counter()
    for _ in range(n_plus):
        atoms[_dyadic(rng, 1, 4)] += Fraction(int(rng.integers(1, 9)), 8)
    for _ in range(n_minus):
        atoms[_dyadic(rng, 0, 1)] += Fraction(int(rng.integers(1, 9)), 8)
    return atoms


def _finish(rng, atoms, ambient="IIinf"):
    bg = Fraction(int(rng.integers(0, 5)), 4)
    return SpectralMeasure(tuple(atoms.items()), (), bg, ambient)


def balanced_measure(seed):
    """IIinf measure with ``tau(A+) == tau(A-)``: a correcting atom at 1/2 or 2 restores balance."""
    rng = _rng(seed)
    atoms = _random_atoms(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    ft = functional_traces(SpectralMeasure(tuple(atoms.items())))
    d = ft.tau_plus - ft.tau_minus
    if d > 0:
        atoms[Fraction(1, 2)] += 2 * d
    elif d < 0:
        atoms[Fraction(2)] += -d
    return _finish(rng, atoms)


def surplus_measure(seed, no_defect=None):
    """IIinf measure with ``tau(A+) > tau(A-)``; about one in four has no defect at all."""
    rng = _rng(seed)
    if no_defect is None:
        no_defect = rng.random() < 0.25
    atoms = _random_atoms(rng, int(rng.integers(1, 4)), 0 if no_defect else int(rng.integers(1, 4)))
    ft = functional_traces(SpectralMeasure(tuple(atoms.items())))
    d = ft.tau_plus - ft.tau_minus
    s = Fraction(int(rng.integers(1, 9)), 8)
    if d - s < 0:
        atoms[Fraction(2)] += s - d
    return _finish(rng, atoms)


def ii1_dyadic(k, seed):
    """II1 measure realisable on ``2^k`` matrices with integer trace ``T`` and ``r <= T <= 3r``.

    Atoms carry masses in multiples of ``2^-k``; the ``r`` nonzero values are
    ``T w_i / sum(w)`` for random integer weights.
    """
    if not 1 <= k <= 6:
        raise ValueError(f"dyadic resolution must be in [1, 6], got {k}")
    rng = _rng(seed)
    N = 2**k
    r = int(rng.integers(1, N + 1))
    T = int(rng.integers(r, 3 * r + 1))
    w = [int(x) for x in rng.integers(1, 9, size=r)]
    total = sum(w)
    values = Counter(Fraction(T * x, total) for x in w)
    atoms = tuple((v, Fraction(c, N)) for v, c in values.items())
    return SpectralMeasure(atoms, (), 0, "II1")


def generate(kind, seed, n=None, k=None):
    """Dispatch by kind; ``n`` sizes matrix kinds and ``k`` the dyadic kind."""
    if kind == "fillmore-matrix":
        return fillmore_matrix(n or 6, seed)
    if kind == "traceless":
        return traceless(n or 8, seed)
    if kind == "balanced-measure":
        return balanced_measure(seed)
    if kind == "surplus-measure":
        return surplus_measure(seed)
    if kind == "ii1-dyadic":
        return ii1_dyadic(k or 2, seed)
    raise ValueError(f"unknown generator kind {kind!r}; expected one of {KINDS}")
