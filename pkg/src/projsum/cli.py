"""``projsum`` command line.

Exit codes: 0 ok, 1 failed verification, 2 parse/schema error,
3 decomposability condition failed, 4 numerical failure.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import generators, io
from .exceptions import ConditionFailed, NumericalFailure, ProjsumError
from .isotropic import zero_diagonal_resolution
from .linalg import EPS_ONE, check_decomposable
from .plans import DEFAULT_DEPTH, build_plan, realize_plan, verify_plan
from .projdecomp import decompose_fillmore, decompose_identity_background, verify_sum

COMMANDS = ("decompose", "check", "zero-diag", "plan", "realize", "verify", "gen")
DEFAULT_TOL = 1e-8
DEFAULT_DYADIC_K = 4

OK, FAILED, SCHEMA, CONDITION, NUMERICAL = 0, 1, 2, 3, 4


class UsageError(ProjsumError):
    pass


def default_tol():
    raw = os.environ.get("PROJSUM_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"PROJSUM_TOL={raw!r} is not a number") from None


def build_parser():
    p = argparse.ArgumentParser(prog="projsum", description="Decompose positive operators into sums of projections.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--in", dest="input", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--tol", type=float)
    p.add_argument("--eps-one", type=float, default=EPS_ONE)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--dyadic-k", type=int, default=DEFAULT_DYADIC_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("finite", "identity-background"), default="finite",
                   help="matrix setting for decompose and check")
    p.add_argument("--kind", choices=generators.KINDS, help="instance kind for gen")
    p.add_argument("--n", type=int, help="matrix size for gen")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text")
    p.set_defaults(fmt="text")
    return p


def _validate(args):
    if args.tol is None:
        args.tol = default_tol()
    if not args.tol > 0:
        raise UsageError("tol must be positive")
    if args.depth < 1:
        raise UsageError("depth must be at least 1")
    if args.dyadic_k < 1:
        raise UsageError("dyadic-k must be at least 1")
    if not 0 <= args.seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    if args.command == "gen":
        if args.kind is None:
            raise UsageError("gen needs --kind")
    elif args.input is None:
        raise UsageError(f"{args.command} needs --in PATH")


def _is_measure(obj):
    return isinstance(obj, dict) and "entries" not in obj and ("atoms" in obj or "ambient" in obj)


def _items(obj):
    # A JSON list is a batch; each element is handled on its own, in input order.
    return obj if isinstance(obj, list) else [obj]


def _emit(obj, batched, args):
    payload = obj if batched else obj[0]
    if args.out:
        io.write_json(args.out, payload)
    return payload


def _decompose(args, obj):
    certs, items = [], []
    for raw in _items(obj):
        A = io.matrix_from_json(raw)
        if args.mode == "identity-background":
            plist = decompose_identity_background(A - np.eye(A.shape[0]), args.eps_one)
        else:
            plist = decompose_fillmore(A)
        cert = verify_sum(A, plist, args.tol)
        certs.append(io.certificate_to_json(cert))
        items.append({
            "status": "pass" if cert.passed else "fail",
            "count": cert.count,
            "residuals": certs[-1]["residuals"],
        })
    return items, certs


def _check(args, obj):
    items = []
    for raw in _items(obj):
        if _is_measure(raw):
            mu = io.measure_from_json(raw)
            report = check_decomposable(mu, f"measure-{mu.ambient}")
        else:
            A = io.matrix_from_json(raw)
            mode = "matrix-identity-background" if args.mode == "identity-background" else "matrix-finite"
            report = check_decomposable(A, mode, args.eps_one)
        d = report.to_dict()
        d["status"] = "pass" if report.decomposable else "fail"
        items.append(d)
    return items, items


def _zero_diag(args, obj):
    items, files = [], []
    for raw in _items(obj):
        X = io.matrix_from_json(raw)
        res = zero_diagonal_resolution(X)
        iso, sum_err, orth = res.residuals()
        scale = max(1.0, float(np.linalg.norm(X, 2)))
        ok = iso <= 1e-9 * scale and sum_err <= args.tol
        files.append(io.resolution_to_json(res))
        items.append({"status": "pass" if ok else "fail", "count": len(res),
                      "residuals": {"isotropy": iso, "sum": sum_err, "orthogonality": orth}})
    return items, files


def _plan(args, obj):
    items, files = [], []
    for raw in _items(obj):
        mu = io.measure_from_json(raw)
        plan = build_plan(mu, args.depth, args.dyadic_k)
        cert = verify_plan(plan)
        files.append(io.plan_to_json(plan))
        items.append({"status": "pass" if cert.passed else "fail",
                      "nodes": sum(1 for _ in plan.walk()),
                      "certificate": io.plan_certificate_to_json(cert)})
    return items, files


def _realize(args, obj):
    items, files = [], []
    for raw in _items(obj):
        if _is_measure(raw):
            plan = build_plan(io.measure_from_json(raw), args.depth, args.dyadic_k)
        else:
            plan = io.plan_from_json(raw)
        real = realize_plan(plan, args.dyadic_k, args.tol)
        leaves = [
            {"leaf": r.leaf_id, "kind": r.kind, "status": "pass" if r.certificate.passed else "fail",
             "certificate": io.certificate_to_json(r.certificate)}
            for r in real.realized
        ]
        leaves += [{"leaf": s.leaf_id, "kind": s.kind, "status": "skip", "reason": s.reason} for s in real.skipped]
        leaves.sort(key=lambda d: [int(x) for x in d["leaf"].split(".")])
        files.append({"leaves": leaves})
        items.append({"status": "pass" if real.passed else "fail", "realized": len(real.realized),
                      "skipped": len(real.skipped)})
    return items, files


def _verify(args, obj):
    items = []
    for raw in _items(obj):
        if isinstance(raw, dict) and "projections" in raw:
            target, projections, background, stored = io.certificate_from_json(raw)
            cert = verify_sum(target, projections + ([background] if background is not None else []), args.tol)
            hash_ok = io.matrix_hash(target) == stored["target_hash"]
            count_ok = cert.count - (background is not None) == stored["count"]
            ok = cert.passed and hash_ok and count_ok
            items.append({"status": "pass" if ok else "fail", "kind": "certificate", "hash_ok": hash_ok,
                          "count_ok": count_ok, "residuals": {"sum": cert.sum_residual,
                                                              "idem_max": cert.idem_max, "herm_max": cert.herm_max}})
        elif isinstance(raw, dict) and "kind" in raw:
            cert = verify_plan(io.plan_from_json(raw))
            items.append({"status": "pass" if cert.passed else "fail", "kind": "plan",
                          "failures": [f"{c.node_id}:{c.name}" for c in cert.failures]})
        else:
            raise io.SchemaError("verify expects a certificate or a plan file")
    return items, None


def _gen(args):
    inst = generators.generate(args.kind, args.seed, n=args.n, k=args.dyadic_k)
    if isinstance(inst, np.ndarray):
        payload = io.matrix_to_json(inst)
    else:
        payload = io.measure_to_json(inst)
    item = {"status": "pass", "kind": args.kind, "seed": args.seed, "rng": generators.RNG_NAME}
    return [item], [payload]


HANDLERS = {
    "decompose": _decompose,
    "check": _check,
    "zero-diag": _zero_diag,
    "plan": _plan,
    "realize": _realize,
    "verify": _verify,
}


def run(args):
    """Execute a parsed command; returns ``(report, exit_code)``."""
    start = time.perf_counter()
    report = {"command": args.command}
    try:
        _validate(args)
        if args.command == "gen":
            items, files = _gen(args)
            batched = False
        else:
            obj = io.load_json(args.input)
            batched = isinstance(obj, list)
            items, files = HANDLERS[args.command](args, obj)
        if files is not None and args.command != "check":
            payload = _emit(files, batched, args)
            if not args.out:
                report["output"] = payload
        elif args.command == "check" and args.out:
            _emit(files, batched, args)
        report["items"] = items
        if args.command == "check":
            code = OK if all(i["status"] == "pass" for i in items) else CONDITION
        else:
            code = OK if all(i["status"] in ("pass", "skip") for i in items) else FAILED
    except ConditionFailed as exc:
        report["error"] = {"code": exc.code, "message": str(exc)}
        if exc.report is not None:
            report["error"]["report"] = exc.report.to_dict()
        code = CONDITION
    except NumericalFailure as exc:
        report["error"] = {"code": exc.code, "message": str(exc)}
        code = NUMERICAL
    except (ProjsumError, OSError) as exc:
        report["error"] = {"code": type(exc).__name__, "message": str(exc)}
        code = SCHEMA
    report["exit_code"] = code
    report["timing_s"] = time.perf_counter() - start
    return report, code


def render_text(report):
    lines = [f"command: {report['command']}"]
    for i, item in enumerate(report.get("items", [])):
        extra = " ".join(
            f"{k}={v}" for k, v in item.items()
            if k not in ("status", "reason") and not isinstance(v, (dict, list))
        )
        lines.append(f"[{i}] {item['status']} {extra}".rstrip())
        if "reason" in item and item["reason"]:
            lines.append(f"    reason: {item['reason']}")
        for key in ("residuals",):
            if key in item:
                lines.append("    " + " ".join(f"{k}={v:.3e}" for k, v in item[key].items()))
    if "error" in report:
        err = report["error"]
        lines.append(f"error: {err['code']}: {err['message']}")
        if "report" in err:
            lines.append(f"    reason: {err['report']['reason']}")
    lines.append(f"exit: {report['exit_code']}  time: {report['timing_s']:.3f}s")
    return "\n".join(lines) + "\n"


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return SCHEMA if exc.code else OK
    report, code = run(args)
    if args.fmt == "json":
        sys.stdout.write(io.dumps(report))
    else:
        sys.stdout.write(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
