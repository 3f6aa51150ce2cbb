"""Decomposition plans for operators given by their spectral measure.

A plan is a tree of :class:`PlanNode`. The halving plan cuts a balanced
measure (``tau+ = tau-``) into blocks carrying ``2^-n`` of the excess and of
the defect, each block a finite corner where the unit-trace argument
applies; what is left in the limit is a projection. Surplus plans first
carve the surplus ``tau+ - tau-`` off the excess region. The II1 plan
rescales ``A`` to unit trace on its range. Steps that rest on external
results are kept as cited leaves.

Everything is exact rational bookkeeping; :func:`verify_plan` re-checks it
and :func:`realize_plan` materialises dyadic leaves as matrices and
decomposes them.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConditionFailed, NotBalanced, NotSurplus
from .linalg import ConditionReport, Reason, check_decomposable
from .measure import (
    ONE,
    ZERO,
    SpectralMeasure,
    add,
    functional_traces,
    is_inf,
    trace_section,
)
from .projdecomp import decompose_fillmore, decompose_unit_trace, verify_sum

DEFAULT_DEPTH = 10

KNZ_SCALED = "KNZ-5.2-scaled-projection"
KNZ_INFINITE = "KNZ-6.6-infinite-excess"
CITATIONS = {
    KNZ_SCALED: "Kaftal-Ng-Zhang: a scaled projection sP (s >= 1) is a strong sum of projections",
    KNZ_INFINITE: "Kaftal-Ng-Zhang: infinite excess trace implies a strong sum of projections",
}

KINDS = (
    "Plan",
    "HalvingBlock",
    "SurplusCut",
    "GeometricBlock",
    "II1Leaf",
    "ProjectionLeaf",
    "CitedLeaf",
    "Tail",
    "ScaleNote",
)
LEAF_KINDS = ("II1Leaf", "ProjectionLeaf", "CitedLeaf", "Tail", "ScaleNote")


@dataclass
class PlanNode:
    kind: str
    measure: SpectralMeasure | None
    params: dict = field(default_factory=dict)
    children: list = field(default_factory=list)
    citation: str | None = None

    def walk(self, node_id="0"):
        """Yield ``(node_id, node)`` depth first; child ids extend the parent's."""
        yield node_id, self
        for i, child in enumerate(self.children, 1):
            yield from child.walk(f"{node_id}.{i}")

    def leaves(self):
        return [(i, n) for i, n in self.walk() if not n.children]

    def find(self, node_id):
        for i, n in self.walk():
            if i == node_id:
                return n
        raise KeyError(node_id)

    def __eq__(self, other):
        if not isinstance(other, PlanNode):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.measure == other.measure
            and self.params == other.params
            and self.citation == other.citation
            and self.children == other.children
        )


def _cited(measure, kind, **payload):
    return PlanNode("CitedLeaf", measure, dict(payload), [], kind)


def _projection_leaf(measure):
    return PlanNode("ProjectionLeaf", measure)


def _ii1_leaf(measure):
    return PlanNode("II1Leaf", measure)


def halving_plan(mu, depth=DEFAULT_DEPTH):
    """Plan for a balanced measure, ``tau(A+) = tau(A-) < inf``.

    Block ``n`` (``1 <= n <= depth``) cuts excess ``2^-n c`` from the region
    above 1 and defect ``2^-n c`` from the region in (0, 1) of what is left,
    with ``c = tau(A+)``. The remaining non-unit mass is a ``Tail`` carrying
    ``2^-depth c`` of each; the mass at 1 is a ``ProjectionLeaf``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if mu.ambient != "IIinf":
        raise ValueError("halving plans live in the IIinf ambient")
    ft = functional_traces(mu)
    if is_inf(ft.tau_plus):
        return _cited(mu, KNZ_INFINITE)
    if ft.tau_plus != ft.tau_minus:
        raise NotBalanced(f"tau+ = {ft.tau_plus} differs from tau- = {ft.tau_minus}")
    if ft.tau_plus == 0:
        return _projection_leaf(mu)
    c = ft.tau_plus
    root = PlanNode("Plan", mu, {"strategy": "halving", "c": c, "depth": depth})
    remaining = mu
    for n in range(1, depth + 1):
        share = c / 2**n
        e_part, remaining = trace_section(remaining, "plus", share)
        f_part, remaining = trace_section(remaining, "minus", share)
        block = add(e_part, f_part)
        node = PlanNode("HalvingBlock", block, {"index": n, "excess": share, "defect": share})
        node.children.append(_ii1_leaf(block))
        root.children.append(node)
    residual = c / 2**depth
    root.children.append(
        PlanNode("Tail", remaining.non_unit_part(), {"depth": depth, "excess": residual, "defect": residual})
    )
    if remaining.background_one != 0:
        root.children.append(_projection_leaf(remaining.unit_part()))
    return root


def surplus_plan(mu, depth=DEFAULT_DEPTH):
    """Plan for ``tau(A-) < tau(A+) < inf``.

    With ``tau(A-) > 0`` a ``SurplusCut`` takes excess ``s = tau+ - tau-``
    from the region above 1 and the balanced rest gets a halving plan.
    With ``tau(A-) = 0`` the excess region is cut into geometric blocks with
    excess ``2^-n tau+`` and the mass at 1 is a projection.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ft = functional_traces(mu)
    if is_inf(ft.tau_plus):
        return _cited(mu, KNZ_INFINITE)
    if not ft.tau_minus < ft.tau_plus:
        raise NotSurplus(f"need tau- < tau+, got tau- = {ft.tau_minus}, tau+ = {ft.tau_plus}")
    if ft.tau_minus > 0:
        s = ft.tau_plus - ft.tau_minus
        carved, rest = trace_section(mu, "plus", s)
        cut = PlanNode("SurplusCut", carved, {"carved": s})
        cut.children.append(_ii1_leaf(carved))
        return PlanNode("Plan", mu, {"strategy": "surplus", "s": s}, [cut, halving_plan(rest, depth)])

    c = ft.tau_plus
    root = PlanNode("Plan", mu, {"strategy": "geometric", "c": c, "depth": depth})
    remaining = mu
    for n in range(1, depth + 1):
        share = c / 2**n
        block, remaining = trace_section(remaining, "plus", share)
        node = PlanNode("GeometricBlock", block, {"index": n, "excess": share})
        node.children.append(_ii1_leaf(block))
        root.children.append(node)
    residual = c / 2**depth
    root.children.append(PlanNode("Tail", remaining.non_unit_part(), {"depth": depth, "excess": residual, "defect": ZERO}))
    if remaining.background_one != 0:
        root.children.append(_projection_leaf(remaining.unit_part()))
    return root


def _dyadic_multiplicities(mu, k, corner):
    """Eigenvalue multiplicities of ``mu`` on a ``2^k`` matrix, or a reason string."""
    if mu.diffuse:
        return "diffuse spectrum cannot be materialised"
    if is_inf(mu.total_mass()):
        return "infinite mass cannot be materialised"
    if corner == 0:
        return "empty corner"
    size = 2**k
    entries = [(a.value, a.mass) for a in mu.atoms]
    if mu.background_one != 0:
        entries.append((ONE, mu.background_one))
    entries.sort()
    out = []
    for v, m in entries:
        count = m / corner * size
        if count.denominator != 1:
            return f"mass not dyadic at resolution {k}"
        out.append((v, int(count)))
    used = sum(c for _, c in out)
    if used > size:
        return f"mass exceeds the corner at resolution {k}"
    return out + ([(ZERO, size - used)] if used < size else [])


def _corner_mass(mu):
    return ONE if mu.ambient == "II1" else mu.total_mass()


def materialize(mu, k):
    """Diagonal ``2^k`` matrix with the distribution of ``mu`` (values ascending, kernel last).

    Masses are measured relative to the corner the measure lives in: the
    whole II1 factor, or the measure's own support in IIinf. Returns
    ``(matrix, None)`` or ``(None, reason)``.
    """
    mult = _dyadic_multiplicities(mu, k, _corner_mass(mu))
    if isinstance(mult, str):
        return None, mult
    diag = [float(v) for v, c in mult for _ in range(c)]
    return np.diag(np.array(diag, dtype=complex)), None


def _fillmore_realizable(mu, k):
    M, _ = materialize(mu, k) if k else (None, None)
    return M is not None and check_decomposable(M, "matrix-finite").decomposable


def ii1_plan(mu, dyadic_k=None):
    """Plan for a measure in the II1 ambient with ``tau(A+) >= tau(A-)``.

    Works in the corner of the range projection: ``s = tau(A)/tau(R_A) >= 1``
    and ``B = A/s`` has unit normalised trace there, so it is an ``II1Leaf``.
    Undoing the scaling is recorded as a ``ScaleNote`` when it can be done
    exactly on matrices (``s`` an integer: repeat each projection ``s``
    times; or, given ``dyadic_k``, ``A`` itself passes the finite-matrix
    condition), and as a cited leaf otherwise.
    """
    if mu.ambient != "II1":
        raise ValueError("ii1_plan needs a measure in the II1 ambient")
    report = check_decomposable(mu, "measure-II1")
    if not report.decomposable:
        raise ConditionFailed(f"tau(A+) < tau(A-): {report.reason}", report)
    ft = functional_traces(mu)
    if ft.tau_plus == 0 and ft.tau_minus == 0:
        return _projection_leaf(mu)
    s = ft.tau_a / ft.tau_range
    B = mu.scaled(1 / s)
    root = PlanNode("Plan", mu, {"strategy": "ii1", "s": s})
    root.children.append(_ii1_leaf(B))
    if s == 1:
        return root
    if s.denominator == 1:
        root.children.append(PlanNode("ScaleNote", mu, {"scale": s, "realization": "repeat"}))
    elif _fillmore_realizable(mu, dyadic_k):
        root.children.append(PlanNode("ScaleNote", mu, {"scale": s, "realization": "fillmore", "dyadic_k": dyadic_k}))
    else:
        root.children.append(_cited(mu, KNZ_SCALED, scale=s, applies_to="each projection of the unit-trace leaf"))
    return root


def build_plan(mu, depth=DEFAULT_DEPTH, dyadic_k=None):
    """Dispatch on the ambient and on the sign of ``tau(A+) - tau(A-)``."""
    if mu.ambient == "II1":
        return ii1_plan(mu, dyadic_k)
    ft = functional_traces(mu)
    if is_inf(ft.tau_plus):
        return _cited(mu, KNZ_INFINITE)
    if ft.tau_plus < ft.tau_minus:
        report = ConditionReport(
            "measure-IIinf", False, Reason.EXCESS_BELOW_DEFECT.value,
            {"tau_plus": ft.tau_plus, "tau_minus": ft.tau_minus},
        )
        raise ConditionFailed("tau(A+) < tau(A-)", report)
    if ft.tau_plus == ft.tau_minus:
        return halving_plan(mu, depth)
    return surplus_plan(mu, depth)


@dataclass(frozen=True)
class Check:
    node_id: str
    name: str
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class PlanCertificate:
    checks: list

    @property
    def passed(self):
        return all(c.ok for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.ok]


def _sum_measures(nodes):
    total = None
    for n in nodes:
        total = n.measure if total is None else add(total, n.measure)
    return total


def verify_plan(plan):
    """Re-check every bookkeeping law of a plan in exact arithmetic."""
    checks = []

    def check(node_id, name, ok, detail=""):
        checks.append(Check(node_id, name, bool(ok), detail))

    for node_id, node in plan.walk():
        if node.kind not in KINDS:
            check(node_id, "kind", False, f"unknown node kind {node.kind!r}")
            continue
        mu = node.measure
        ft = functional_traces(mu) if mu is not None else None
        if ft is not None:
            check(node_id, "split-identity", ft.identity_holds(), f"tau(A) = {ft.tau_a}")

        if node.kind == "ProjectionLeaf":
            check(node_id, "projection", ft.tau_plus == 0 and ft.tau_minus == 0,
                  f"tau+ = {ft.tau_plus}, tau- = {ft.tau_minus}")
        elif node.kind == "II1Leaf":
            check(node_id, "finite-corner", not is_inf(ft.tau_range), f"tau(R) = {ft.tau_range}")
            check(node_id, "ii1-condition", ft.tau_plus >= ft.tau_minus,
                  f"tau+ = {ft.tau_plus}, tau- = {ft.tau_minus}")
        elif node.kind == "CitedLeaf":
            check(node_id, "citation", node.citation in CITATIONS, f"citation {node.citation!r}")
        elif node.kind in ("HalvingBlock", "GeometricBlock", "SurplusCut"):
            leaves = [c for c in node.children if c.kind == "II1Leaf"]
            check(node_id, "wraps-ii1-leaf", len(leaves) == 1 and leaves[0].measure == mu)
        elif node.kind == "Plan":
            _verify_strategy(node_id, node, ft, check)
    return PlanCertificate(checks)


def _verify_strategy(node_id, node, ft, check):
    strategy = node.params.get("strategy")
    kids = node.children
    if strategy in ("halving", "geometric", "surplus"):
        total = _sum_measures(kids)
        check(node_id, "mass-partition", total is not None and total == node.measure,
              "children do not add up to the parent measure")
    if strategy in ("halving", "geometric"):
        c = node.params["c"]
        depth = node.params["depth"]
        block_kind = "HalvingBlock" if strategy == "halving" else "GeometricBlock"
        check(node_id, "excess-total", ft.tau_plus == c, f"tau+ = {ft.tau_plus}, c = {c}")
        if strategy == "halving":
            check(node_id, "balanced", ft.tau_plus == ft.tau_minus, f"tau- = {ft.tau_minus}")
        else:
            check(node_id, "no-defect", ft.tau_minus == 0, f"tau- = {ft.tau_minus}")
        blocks = [(i, k) for i, k in enumerate(kids, 1) if k.kind == block_kind]
        check(node_id, "depth", [k.params.get("index") for _, k in blocks] == list(range(1, depth + 1)),
              f"expected blocks 1..{depth}")
        for i, k in blocks:
            n = k.params.get("index")
            share = c / 2**n
            f = functional_traces(k.measure)
            want_defect = share if strategy == "halving" else ZERO
            check(f"{node_id}.{i}", "block-law", f.tau_plus == share and f.tau_minus == want_defect,
                  f"block {n}: tau+ = {f.tau_plus}, tau- = {f.tau_minus}, expected {share}, {want_defect}")
        tails = [(i, k) for i, k in enumerate(kids, 1) if k.kind == "Tail"]
        check(node_id, "tail-present", len(tails) == 1)
        for i, k in tails:
            f = functional_traces(k.measure)
            r = c / 2**depth
            want_defect = r if strategy == "halving" else ZERO
            check(f"{node_id}.{i}", "tail-residual", f.tau_plus == r and f.tau_minus == want_defect,
                  f"tail: tau+ = {f.tau_plus}, tau- = {f.tau_minus}, expected {r}")
            # The geometric series of block shares plus the tail share is exactly c.
            shares = sum((c / 2**n for n in range(1, depth + 1)), ZERO) + r
            check(f"{node_id}.{i}", "geometric-sum", shares == c)
        for i, k in enumerate(kids, 1):
            if k.kind not in (block_kind, "Tail", "ProjectionLeaf"):
                check(f"{node_id}.{i}", "child-kind", False, f"unexpected {k.kind}")
    elif strategy == "surplus":
        s = node.params["s"]
        check(node_id, "surplus", s == ft.tau_plus - ft.tau_minus and s > 0, f"s = {s}")
        cuts = [(i, k) for i, k in enumerate(kids, 1) if k.kind == "SurplusCut"]
        check(node_id, "one-cut", len(cuts) == 1)
        for i, k in cuts:
            f = functional_traces(k.measure)
            check(f"{node_id}.{i}", "carved", f.tau_plus == s and f.tau_minus == 0 and k.params.get("carved") == s,
                  f"carved tau+ = {f.tau_plus}, tau- = {f.tau_minus}")
        for i, k in enumerate(kids, 1):
            if k.kind == "SurplusCut":
                continue
            f = functional_traces(k.measure)
            check(f"{node_id}.{i}", "remainder-balanced", f.tau_plus == f.tau_minus,
                  f"tau+ = {f.tau_plus}, tau- = {f.tau_minus}")
    elif strategy == "ii1":
        s = node.params["s"]
        check(node_id, "scale", ft.tau_range > 0 and s == ft.tau_a / ft.tau_range and s >= 1, f"s = {s}")
        leaves = [k for k in kids if k.kind == "II1Leaf"]
        check(node_id, "one-leaf", len(leaves) == 1)
        for k in leaves:
            f = functional_traces(k.measure)
            check(node_id, "leaf-mass", k.measure.total_mass() == node.measure.total_mass())
            check(node_id, "leaf-unit-trace", f.tau_a == f.tau_range, f"tau(B) = {f.tau_a}, tau(R_B) = {f.tau_range}")
            check(node_id, "leaf-is-scaled", k.measure == node.measure.scaled(1 / s))
        for k in kids:
            if k.kind == "ScaleNote":
                ok = k.params.get("scale") == s
                if k.params.get("realization") == "repeat":
                    ok = ok and s.denominator == 1
                check(node_id, "scale-note", ok, f"note {k.params}")
    else:
        check(node_id, "strategy", False, f"unknown strategy {strategy!r}")


@dataclass(frozen=True)
class RealizedLeaf:
    leaf_id: str
    kind: str
    matrix: np.ndarray
    projections: object
    certificate: object


@dataclass(frozen=True)
class SkippedLeaf:
    leaf_id: str
    kind: str
    reason: str


@dataclass(frozen=True)
class Realization:
    realized: list
    skipped: list

    @property
    def passed(self):
        return all(r.certificate.passed for r in self.realized)


def _decompose_leaf(M):
    n = M.shape[0]
    tr = float(np.trace(M).real)
    if abs(tr - n) <= 1e-8:
        return decompose_unit_trace(M), None
    report = check_decomposable(M, "matrix-finite")
    if not report.decomposable:
        return None, f"matrix fails the finite condition ({report.reason})"
    return decompose_fillmore(M), None


def realize_plan(plan, k, tol=1e-8):
    """Materialise every dyadic leaf of ``plan`` on ``2^k`` matrices and decompose it."""
    realized, skipped = [], []
    for leaf_id, node in plan.walk():
        if node.children:
            continue
        kind = node.kind
        if kind == "CitedLeaf":
            skipped.append(SkippedLeaf(leaf_id, kind, f"cited external result {node.citation}"))
            continue
        if kind == "Tail":
            skipped.append(SkippedLeaf(leaf_id, kind, "truncated tail of an infinite construction"))
            continue
        M, reason = materialize(node.measure, k)
        if M is None:
            skipped.append(SkippedLeaf(leaf_id, kind, reason))
            continue
        if kind == "ProjectionLeaf":
            plist = [M]
        elif kind == "ScaleNote":
            s = node.params["scale"]
            if node.params.get("realization") == "repeat":
                base, reason = _decompose_leaf(M / float(s))
                plist = None if base is None else [p for p in base.projections for _ in range(int(s))]
            else:
                plist, reason = _decompose_leaf(M)
            if plist is None:
                skipped.append(SkippedLeaf(leaf_id, kind, reason))
                continue
        else:
            plist, reason = _decompose_leaf(M)
            if plist is None:
                skipped.append(SkippedLeaf(leaf_id, kind, reason))
                continue
        realized.append(RealizedLeaf(leaf_id, kind, M, plist, verify_sum(M, plist, tol)))
    return Realization(realized, skipped)


def leaf_measures(plan):
    """Measures of the leaves that partition the root (scale notes and II1 rescalings excluded)."""
    out = []

    def visit(node):
        if node.kind == "Plan" and node.params.get("strategy") == "ii1":
            out.append(node.measure)
            return
        if not node.children:
            out.append(node.measure)
            return
        if node.kind in ("HalvingBlock", "GeometricBlock", "SurplusCut"):
            out.append(node.measure)
            return
        for c in node.children:
            visit(c)

    visit(plan)
    return out

