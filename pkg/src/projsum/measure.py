"""Spectral measures with exact rational masses.

A :class:`SpectralMeasure` is the distribution of a positive operator in a
semifinite factor: atoms ``(value, mass)``, intervals of constant density
and an optional mass at the value 1 (``background_one``). Masses are traces
of spectral projections, so they are infinitely divisible, and splitting
them is how a cut by a commuting projection is modelled. All arithmetic is
done with :class:`fractions.Fraction`; ``INF`` marks infinite mass.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exceptions import InputError, NotSubMeasure, TargetOutOfRange

INF = math.inf
ONE = Fraction(1)
ZERO = Fraction(0)

AMBIENTS = ("II1", "IIinf")
PARTS = ("plus", "minus", "whole")


def as_rational(x, allow_inf=False):
    """Parse ``x`` as an exact rational; floats are rejected (not exact)."""
    if isinstance(x, float) and math.isinf(x) and x > 0 and allow_inf:
        return INF
    if isinstance(x, str):
        s = x.strip()
        if s.upper() in ("INF", "INFINITE", "INFINITY"):
            if allow_inf:
                return INF
            raise InputError("infinite value not allowed here")
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational number: {x!r}") from exc
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return Fraction(x)
    raise InputError(f"not an exact rational: {x!r}")


def is_inf(x):
    return isinstance(x, float) and math.isinf(x)


def _sub_mass(a, b):
    # a - b for masses; an infinite mass minus an infinite mass is the whole of it.
    if is_inf(a):
        return ZERO if is_inf(b) else INF
    if is_inf(b):
        raise NotSubMeasure("cannot remove an infinite mass from a finite one")
    return a - b


@dataclass(frozen=True)
class Atom:
    value: Fraction
    mass: object  # Fraction or INF


@dataclass(frozen=True)
class Piece:
    """Constant density on ``[lo, hi]``."""

    lo: Fraction
    hi: Fraction
    density: Fraction

    @property
    def mass(self):
        return self.density * (self.hi - self.lo)


@dataclass(frozen=True)
class SpectralMeasure:
    """Distribution of a positive operator.

    In the ``II1`` ambient the total mass is at most 1 and the remainder is
    the kernel of the operator (value 0). Atoms at the value 1 are folded
    into ``background_one``. Infinite masses are only allowed in ``IIinf``.
    """

    atoms: tuple = ()
    diffuse: tuple = ()
    background_one: object = ZERO
    ambient: str = "IIinf"

    def __post_init__(self):
        if self.ambient not in AMBIENTS:
            raise InputError(f"ambient must be one of {AMBIENTS}, got {self.ambient!r}")
        allow_inf = self.ambient == "IIinf"
        bg = as_rational(self.background_one, allow_inf=allow_inf) if self.background_one != 0 else ZERO
        if not is_inf(bg) and bg < 0:
            raise InputError("background_one must be nonnegative")
        atoms = {}
        for a in self.atoms:
            if not isinstance(a, Atom):
                a = Atom(*a)
            v = as_rational(a.value)
            m = as_rational(a.mass, allow_inf=allow_inf)
            if v <= 0:
                raise InputError(f"atom value {v} must be positive")
            if not is_inf(m) and m <= 0:
                raise InputError(f"atom mass {m} must be positive")
            if v == 1:
                bg = bg + m
                continue
            if v in atoms:
                raise InputError(f"duplicate atom value {v}")
            atoms[v] = m
        pieces = []
        for p in self.diffuse:
            if not isinstance(p, Piece):
                p = Piece(*p)
            lo, hi, rho = as_rational(p.lo), as_rational(p.hi), as_rational(p.density)
            if not 0 < lo < hi:
                raise InputError(f"interval [{lo}, {hi}] must satisfy 0 < lo < hi")
            if rho <= 0:
                raise InputError("densities must be positive")
            pieces.append(Piece(lo, hi, rho))
        pieces.sort(key=lambda p: (p.lo, p.hi))
        for p, q in zip(pieces, pieces[1:]):
            if q.lo < p.hi:
                raise InputError("diffuse intervals overlap")
        for v in atoms:
            if any(p.lo < v < p.hi for p in pieces):
                raise InputError(f"atom value {v} lies inside a diffuse interval")
        object.__setattr__(self, "atoms", tuple(Atom(v, atoms[v]) for v in sorted(atoms)))
        object.__setattr__(self, "diffuse", tuple(pieces))
        object.__setattr__(self, "background_one", bg)
        if self.ambient == "II1" and self.total_mass() > 1:
            raise InputError(f"II1 measure has total mass {self.total_mass()} > 1")

    @classmethod
    def empty(cls, ambient="IIinf"):
        return cls((), (), ZERO, ambient)

    def total_mass(self):
        total = self.background_one
        for a in self.atoms:
            total = total + a.mass
        for p in self.diffuse:
            total = total + p.mass
        return total

    @property
    def kernel_mass(self):
        """Mass at value 0; only meaningful (and nonzero) in the II1 ambient."""
        return ONE - self.total_mass() if self.ambient == "II1" else ZERO

    @property
    def is_empty(self):
        return not self.atoms and not self.diffuse and self.background_one == 0

    def max_value(self):
        vals = [a.value for a in self.atoms] + [p.hi for p in self.diffuse]
        if self.background_one != 0:
            vals.append(ONE)
        return max(vals, default=ZERO)

    def unit_part(self):
        return SpectralMeasure((), (), self.background_one, self.ambient)

    def non_unit_part(self):
        return SpectralMeasure(self.atoms, self.diffuse, ZERO, self.ambient)

    def scaled(self, factor):
        """Distribution of ``factor * A`` (values scaled, masses unchanged)."""
        factor = as_rational(factor)
        atoms = [(a.value * factor, a.mass) for a in self.atoms]
        if self.background_one != 0:
            atoms.append((factor, self.background_one))
        pieces = [Piece(p.lo * factor, p.hi * factor, p.density / factor) for p in self.diffuse]
        return SpectralMeasure(tuple(atoms), tuple(pieces), ZERO, self.ambient)

    def with_ambient(self, ambient):
        return SpectralMeasure(self.atoms, self.diffuse, self.background_one, ambient)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return subtract(self, other)

    def __eq__(self, other):
        if not isinstance(other, SpectralMeasure):
            return NotImplemented
        return _canonical(self) == _canonical(other)

    def __hash__(self):
        return hash(_canonical(self))

    def __le__(self, other):
        try:
            subtract(other, self)
        except NotSubMeasure:
            return False
        return True


def _elementary(pieces):
    # Split pieces at every breakpoint and sum densities on each elementary interval.
    pts = sorted({x for p in pieces for x in (p.lo, p.hi)})
    out = []
    for lo, hi in zip(pts, pts[1:]):
        rho = sum((p.density for p in pieces if p.lo <= lo and hi <= p.hi), ZERO)
        out.append((lo, hi, rho))
    return out


def _merge(segments):
    # Drop empty segments and join adjacent ones with equal density.
    out = []
    for lo, hi, rho in segments:
        if rho == 0:
            continue
        if out and out[-1][1] == lo and out[-1][2] == rho:
            out[-1] = (out[-1][0], hi, rho)
        else:
            out.append((lo, hi, rho))
    return [Piece(*s) for s in out]


def _canonical(mu):
    segs = tuple((p.lo, p.hi, p.density) for p in _merge(_elementary(mu.diffuse)))
    atoms = tuple((a.value, a.mass) for a in mu.atoms)
    return atoms, segs, mu.background_one


def _combine_ambient(a, b):
    return "IIinf" if "IIinf" in (a.ambient, b.ambient) else "II1"


def add(a, b):
    atoms = {x.value: x.mass for x in a.atoms}
    for x in b.atoms:
        atoms[x.value] = atoms.get(x.value, ZERO) + x.mass
    pieces = _merge(_elementary(list(a.diffuse) + list(b.diffuse)))
    return SpectralMeasure(
        tuple(atoms.items()), tuple(pieces), a.background_one + b.background_one, _combine_ambient(a, b)
    )


def subtract(a, b):
    """``a - b`` as measures; raises NotSubMeasure unless ``b <= a``."""
    atoms = {x.value: x.mass for x in a.atoms}
    for x in b.atoms:
        if x.value not in atoms:
            raise NotSubMeasure(f"atom at {x.value} is not in the parent measure")
        m = _sub_mass(atoms[x.value], x.mass)
        if m < 0:
            raise NotSubMeasure(f"atom at {x.value} exceeds the parent mass")
        atoms[x.value] = m
    atoms = {v: m for v, m in atoms.items() if m != 0}
    bg = _sub_mass(a.background_one, b.background_one)
    if bg < 0:
        raise NotSubMeasure("background mass exceeds the parent")
    segs = _elementary(list(a.diffuse) + [Piece(p.lo, p.hi, -p.density) for p in b.diffuse])
    for lo, hi, rho in segs:
        if rho < 0:
            raise NotSubMeasure(f"diffuse density on [{lo}, {hi}] exceeds the parent")
    return SpectralMeasure(tuple(atoms.items()), tuple(_merge(segs)), bg, a.ambient)


@dataclass(frozen=True)
class TraceFunctionals:
    """``tau(A)``, ``tau(A+)``, ``tau(A-)`` and ``tau(R_A)`` of a measure."""

    tau_a: object
    tau_plus: object
    tau_minus: object
    tau_range: object

    @property
    def finite(self):
        return not any(is_inf(x) for x in (self.tau_a, self.tau_plus, self.tau_minus, self.tau_range))

    def identity_holds(self):
        """``tau(A) = tau(A+) - tau(A-) + tau(R_A)``; vacuous when something is infinite."""
        if not self.finite:
            return True
        return self.tau_a == self.tau_plus - self.tau_minus + self.tau_range


def _excess_of_piece(lo, hi, rho):
    # rho * integral of (x - 1) over [lo, hi] intersected with (1, inf)
    lo = max(lo, ONE)
    if hi <= lo:
        return ZERO
    return rho * ((hi - 1) ** 2 - (lo - 1) ** 2) / 2


def _defect_of_piece(lo, hi, rho):
    # rho * integral of (1 - x) over [lo, hi] intersected with (0, 1)
    hi = min(hi, ONE)
    if hi <= lo:
        return ZERO
    return rho * ((1 - lo) ** 2 - (1 - hi) ** 2) / 2


def _weight(v, m):
    # v * m with 0 * INF treated as 0
    return ZERO if v == 0 else v * m


def functional_traces(mu):
    tau_plus = tau_minus = tau_a = ZERO
    for a in mu.atoms:
        tau_a = tau_a + _weight(a.value, a.mass)
        if a.value > 1:
            tau_plus = tau_plus + _weight(a.value - 1, a.mass)
        elif a.value < 1:
            tau_minus = tau_minus + _weight(1 - a.value, a.mass)
    for p in mu.diffuse:
        tau_a += p.density * (p.hi ** 2 - p.lo ** 2) / 2
        tau_plus = tau_plus + _excess_of_piece(p.lo, p.hi, p.density)
        tau_minus = tau_minus + _defect_of_piece(p.lo, p.hi, p.density)
    tau_a = tau_a + mu.background_one
    return TraceFunctionals(tau_a, tau_plus, tau_minus, mu.total_mass())


def _part_functional(part):
    if part == "plus":
        return lambda v: v - 1, lambda lo, hi, r: _excess_of_piece(lo, hi, r)
    if part == "minus":
        return lambda v: 1 - v, lambda lo, hi, r: _defect_of_piece(lo, hi, r)
    return lambda v: v, lambda lo, hi, r: r * (hi ** 2 - lo ** 2) / 2


def _part_items(mu, part, floor=ZERO):
    """Items of ``mu`` in the spectral region of ``part`` with value >= floor, ascending.

    Each item is ``("atom", value, mass)`` or ``("piece", lo, hi, density)``.
    """
    if part == "plus":
        lo_b, hi_b = ONE, None
    elif part == "minus":
        lo_b, hi_b = ZERO, ONE
    else:
        lo_b, hi_b = ZERO, None
    items = []
    for a in mu.atoms:
        inside = a.value > lo_b and (hi_b is None or a.value < hi_b)
        if inside and a.value >= floor:
            items.append((a.value, 0, ("atom", a.value, a.mass)))
    if part == "whole" and mu.background_one != 0 and ONE >= floor:
        items.append((ONE, 0, ("atom", ONE, mu.background_one)))
    for p in mu.diffuse:
        lo = max(p.lo, lo_b, floor)
        hi = p.hi if hi_b is None else min(p.hi, hi_b)
        if lo < hi:
            items.append((lo, 1, ("piece", lo, hi, p.density)))
    items.sort(key=lambda t: (t[0], t[1]))
    return [t[2] for t in items]


def part_trace(mu, part, floor=ZERO):
    """The functional of ``part`` restricted to values >= ``floor``."""
    per_atom, per_piece = _part_functional(part)
    total = ZERO
    for item in _part_items(mu, part, floor):
        if item[0] == "atom":
            total = total + _weight(per_atom(item[1]), item[2])
        else:
            total = total + per_piece(*item[1:])
    return total


@dataclass(frozen=True)
class Section:
    """Result of :func:`trace_section`; unpacks as ``(sub, rest)``."""

    sub: SpectralMeasure
    rest: SpectralMeasure
    part: str
    target: Fraction
    exhaustion_index: int | None = None

    def __iter__(self):
        return iter((self.sub, self.rest))

    @property
    def cut_mass(self):
        """Trace of the cutting projection."""
        return self.sub.total_mass()


def _min_exhaustion_index(mu, part, t):
    # Smallest n with part_trace restricted to values >= 1/n reaching t.
    vals = [a.value for a in mu.atoms] + [p.lo for p in mu.diffuse]
    if mu.background_one != 0:
        vals.append(ONE)
    vmin = min(vals)
    hi = max(1, math.ceil(1 / vmin))
    if part_trace(mu, part, Fraction(1, 1)) >= t:
        return 1
    lo = 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if part_trace(mu, part, Fraction(1, mid)) >= t:
            hi = mid
        else:
            lo = mid
    return hi


def trace_section(mu, part, t):
    """Cut ``mu`` by a commuting projection so the ``part`` functional of the cut is ``t``.

    Consumes the spectral region of ``part`` in ascending value order and
    splits the boundary atom or interval fractionally (an interval's density
    is split, so everything stays rational). When the range trace is
    infinite the cut is first confined to values >= 1/n for the least n whose
    restricted functional reaches ``t``.
    """
    if part not in PARTS:
        raise ValueError(f"part must be one of {PARTS}")
    t = as_rational(t)
    total = part_trace(mu, part)
    if t < 0 or t > total:
        raise TargetOutOfRange(f"target {t} outside [0, {total}]")
    floor = ZERO
    index = None
    if is_inf(mu.total_mass()):
        index = _min_exhaustion_index(mu, part, t)
        floor = Fraction(1, index)

    per_atom, per_piece = _part_functional(part)
    atoms, pieces, bg = [], [], ZERO
    remaining = t
    for item in _part_items(mu, part, floor):
        if remaining == 0:
            break
        if item[0] == "atom":
            _, v, m = item
            unit = per_atom(v)
            f = _weight(unit, m)
            if f <= remaining:
                take = m
                remaining -= f
            else:
                take = remaining / unit
                remaining = ZERO
            if v == 1:
                bg = take
            else:
                atoms.append((v, take))
        else:
            _, lo, hi, rho = item
            f = per_piece(lo, hi, rho)
            if f == 0:
                continue
            if f <= remaining:
                pieces.append(Piece(lo, hi, rho))
                remaining -= f
            else:
                pieces.append(Piece(lo, hi, rho * remaining / f))
                remaining = ZERO
    sub = SpectralMeasure(tuple(atoms), tuple(pieces), bg, mu.ambient)
    return Section(sub, subtract(mu, sub), part, t, index)


@dataclass(frozen=True)
class CutCheck:
    """Excess/defect bookkeeping across a cut ``mu = sub + rest``."""

    mu: TraceFunctionals
    sub: TraceFunctionals
    rest: TraceFunctionals
    holds: bool = field(default=False)


def commuting_cut(mu, sub):
    """Confirm ``(AE)+ = A+ E`` and ``(AE)- = A- E`` at the level of traces.

    ``sub`` is the distribution of ``AE`` restricted to ``E``. Its own
    excess/defect traces must equal what it removes from ``mu``'s, i.e.
    ``tau+(sub) + tau+(rest) = tau+(mu)`` and likewise for ``tau-``.
    """
    rest = subtract(mu, sub)
    f_mu, f_sub, f_rest = functional_traces(mu), functional_traces(sub), functional_traces(rest)

    def additive(a, b, c):
        if is_inf(c):
            return is_inf(a) or is_inf(b)
        return a + b == c

    holds = (
        additive(f_sub.tau_plus, f_rest.tau_plus, f_mu.tau_plus)
        and additive(f_sub.tau_minus, f_rest.tau_minus, f_mu.tau_minus)
        and add(sub, rest) == mu
    )
    return CutCheck(f_mu, f_sub, f_rest, holds)
