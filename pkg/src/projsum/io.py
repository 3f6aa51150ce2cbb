"""JSON file formats: matrices, resolutions, certificates, measures and plans."""

import hashlib
import json
from fractions import Fraction

import numpy as np

from .exceptions import SchemaError
from .measure import INF, Piece, SpectralMeasure, functional_traces, is_inf
from .plans import PlanNode

FRACTION_PARAMS = {"c", "excess", "defect", "carved", "s", "scale"}


def _entry(z, complex_):
    z = complex(z)
    return [z.real, z.imag] if complex_ else z.real


def matrix_to_json(A):
    A = np.asarray(A)
    cplx = bool(np.iscomplexobj(A) and np.any(A.imag != 0))
    return {"n": int(A.shape[0]), "complex": cplx, "entries": [_entry(z, cplx) for z in A.ravel()]}


def matrix_from_json(obj):
    try:
        n = int(obj["n"])
        cplx = bool(obj.get("complex", False))
        entries = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"matrix object needs 'n', 'complex' and 'entries': {exc}") from exc
    if entries and isinstance(entries[0], list) and len(entries) == n and (
        not cplx or (entries[0] and isinstance(entries[0][0], list))
    ):
        entries = [z for row in entries for z in row]
    if len(entries) != n * n:
        raise SchemaError(f"expected {n * n} entries, got {len(entries)}")
    try:
        if cplx:
            vals = [complex(float(z[0]), float(z[1])) for z in entries]
        else:
            vals = [complex(float(z)) for z in entries]
    except (TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"bad matrix entry: {exc}") from exc
    return np.array(vals, dtype=complex).reshape(n, n)


def canonical_serialization(A):
    """Row-major, 17 significant digits, real and imaginary parts of every entry."""
    A = np.asarray(A, dtype=complex)
    parts = [f"{A.shape[0]}"]
    parts += [f"{z.real:.17g},{z.imag:.17g}" for z in A.ravel()]
    return ";".join(parts)


def matrix_hash(A):
    return hashlib.sha256(canonical_serialization(A).encode()).hexdigest()


def resolution_to_json(res):
    if res.basis is None:
        raise SchemaError("only rank-one resolutions have a vector file format")
    B = res.basis
    return {
        "n": int(B.shape[0]),
        "vectors": [[[z.real, z.imag] for z in B[:, j]] for j in range(B.shape[1])],
    }


def resolution_vectors_from_json(obj):
    try:
        n = int(obj["n"])
        cols = [[complex(float(z[0]), float(z[1])) for z in v] for v in obj["vectors"]]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"bad resolution file: {exc}") from exc
    if any(len(v) != n for v in cols):
        raise SchemaError("vector length differs from n")
    return np.array(cols, dtype=complex).T


def certificate_to_json(cert):
    out = {
        "target_hash": matrix_hash(cert.target),
        "projections": [matrix_to_json(P) for P in cert.projections],
        "residuals": {"sum": cert.sum_residual, "idem_max": cert.idem_max, "herm_max": cert.herm_max},
        "count": cert.count,
        "mode": cert.mode,
        "target": matrix_to_json(cert.target),
        "tol": cert.tol,
        "passed": cert.passed,
    }
    if cert.background is not None:
        out["background"] = matrix_to_json(cert.background)
    return out


def certificate_from_json(obj):
    """Return ``(target, projections, background, stored)`` from a certificate object."""
    try:
        projections = [matrix_from_json(p) for p in obj["projections"]]
        target = matrix_from_json(obj["target"])
        background = matrix_from_json(obj["background"]) if obj.get("background") else None
        stored = {k: obj[k] for k in ("target_hash", "count", "mode")}
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad certificate file: {exc}") from exc
    return target, projections, background, stored


def rational_str(x):
    return "INF" if is_inf(x) else str(Fraction(x))


def measure_to_json(mu):
    return {
        "ambient": mu.ambient,
        "atoms": [{"value": rational_str(a.value), "mass": rational_str(a.mass)} for a in mu.atoms],
        "diffuse": [
            {"interval": [rational_str(p.lo), rational_str(p.hi)], "density": rational_str(p.density)}
            for p in mu.diffuse
        ],
        "background_one": rational_str(mu.background_one),
    }


def _rational_field(x, allow_inf=False):
    # JSON numbers are accepted only when they are integers (exactness).
    if isinstance(x, bool):
        raise SchemaError(f"not a rational: {x!r}")
    if isinstance(x, float):
        if x.is_integer():
            return Fraction(int(x))
        raise SchemaError(f"floating point value {x!r} is not exact; write it as 'p/q'")
    if isinstance(x, str) and x.strip().upper() in ("INF", "INFINITE"):
        if allow_inf:
            return INF
        raise SchemaError("INF not allowed here")
    return x


def measure_from_json(obj):
    try:
        ambient = obj.get("ambient", "IIinf")
        atoms = tuple(
            (_rational_field(a["value"]), _rational_field(a["mass"], True)) for a in obj.get("atoms", [])
        )
        diffuse = tuple(
            Piece(_rational_field(d["interval"][0]), _rational_field(d["interval"][1]), _rational_field(d["density"]))
            for d in obj.get("diffuse", [])
        )
        bg = _rational_field(obj.get("background_one", "0"), True)
        return SpectralMeasure(atoms, diffuse, bg, ambient)
    except (KeyError, TypeError, IndexError, AttributeError) as exc:
        raise SchemaError(f"bad measure file: {exc}") from exc
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _param_to_json(v):
    if isinstance(v, Fraction):
        return str(v)
    return v


def plan_to_json(node, node_id="0"):
    mu = node.measure
    out = {"id": node_id, "kind": node.kind}
    if mu is not None:
        ft = functional_traces(mu)
        out["masses"] = {
            "total": rational_str(ft.tau_range),
            "tau_a": rational_str(ft.tau_a),
            "excess": rational_str(ft.tau_plus),
            "defect": rational_str(ft.tau_minus),
        }
        out["measure"] = measure_to_json(mu)
    else:
        out["masses"] = None
        out["measure"] = None
    out["params"] = {k: _param_to_json(v) for k, v in node.params.items()}
    out["citation"] = node.citation
    out["children"] = [plan_to_json(c, f"{node_id}.{i}") for i, c in enumerate(node.children, 1)]
    return out


def plan_from_json(obj):
    try:
        params = {}
        for k, v in obj.get("params", {}).items():
            params[k] = Fraction(v) if k in FRACTION_PARAMS else v
        measure = measure_from_json(obj["measure"]) if obj.get("measure") else None
        children = [plan_from_json(c) for c in obj.get("children", [])]
        return PlanNode(obj["kind"], measure, params, children, obj.get("citation"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad plan file: {exc}") from exc


def plan_certificate_to_json(cert):
    return {
        "pass": cert.passed,
        "checks": [{"node": c.node_id, "check": c.name, "ok": c.ok, "detail": c.detail} for c in cert.checks],
    }


def dumps(obj):
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def load_matrix(path):
    return matrix_from_json(load_json(path))


def load_measure(path):
    return measure_from_json(load_json(path))
