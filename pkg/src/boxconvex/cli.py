"""Command-line front end: one JSON document in, one JSON report out.

    boxconvex certify --input job.json --seed 3 --trials 2000

Exit codes: 0 holds / certified / computed, 1 fails / refuted, 2 bad input.
Reports are written with sorted keys so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import schemas
from .core import MultiIndex, PointSystem, box_from_json
from .divdiff import certify_box_convexity, divdiff_report
from .errors import BoxConvexError, ParseError, SchemaError
from .exprfn import FunctionSpec, function_from_json
from .inequalities import hh_check, jensen_gap, rasa_check, strongly_convex_check
from .measures import (DiscreteSignedMeasure, FV1Function, TensorFVFunction, fv1_decompose,
                       grid_rectangles, measure_from_json, tensor_decompose)
from .orders import (check_box_order_joint, check_box_order_product, check_nconvex_order)
from .pseudopoly import default_nodes, grid_interpolant, lagrange_slice_interpolant, regularize
from .represent import representation_from_json, roundtrip_extract, synthesize

COMMANDS = tuple(schemas.SCHEMAS)
DEFAULTS = {"seed": 0, "tol": 1e-9, "trials": 500, "resolution": 8}
EXIT = {"holds": 0, "certified": 0, "computed": 0, "fails": 1, "refuted": 1}


class Job:
    """Parsed request: the input document plus the effective settings."""

    def __init__(self, command, doc, seed, tol, trials, resolution):
        self.command = command
        self.doc = doc
        self.seed = seed
        self.tol = tol
        self.trials = trials
        self.resolution = resolution
        self.config = {"seed": seed, "tol": tol, "trials": trials, "resolution": resolution}

    def function(self, key="f", arity=None) -> FunctionSpec:
        return function_from_json(self.doc[key], arity, key)

    def measure(self, doc, path, discrete=True):
        m = measure_from_json(doc, path, self.resolution)
        if discrete and not isinstance(m, DiscreteSignedMeasure):
            raise SchemaError("a discrete measure (atoms or binomial) is required here", path)
        return m


def _order(doc_n) -> MultiIndex:
    return MultiIndex(tuple(int(v) for v in doc_n))


def _cert_verdict(cert):
    return "certified" if cert.certified else "refuted"


def _hyperplane_probes(nodes, rng, per_node, lo, hi, axes=None):
    """Random points with x_i pinned to a node, for every axis i and node."""
    d = len(nodes)
    out = []
    for i in (range(d) if axes is None else axes):
        for u in nodes[i]:
            P = rng.uniform(lo, hi, size=(per_node, d))
            P[:, i] = u
            out.append(P)
    return np.concatenate(out) if out else np.zeros((0, d))


def _probe_box(nodes, box):
    if box is not None and box.is_finite():
        return np.array(box.lower), np.array(box.upper)
    lo = np.array([min(u) - 1.0 if u else -1.0 for u in nodes])
    hi = np.array([max(u) + 1.0 if u else 1.0 for u in nodes])
    return lo, hi


# ---------------------------------------------------------------------------
# handlers: each returns (verdict, extra config, result, statement)
# ---------------------------------------------------------------------------

def run_divdiff(job: Job):
    doc = job.doc
    s = PointSystem(tuple(tuple(float(v) for v in t) for t in doc["nodes"]))
    f = job.function("f", s.d)
    box = box_from_json(doc["box"]) if "box" in doc else None
    method = doc.get("method", "nested")
    axis_order = doc.get("axis_order")
    if method == "both":
        a = divdiff_report(s, f, "nested", axis_order, box)
        b = divdiff_report(s, f, "expanded", None, box)
        result = {"nested": a.value, "expanded": b.value, "scale": b.scale,
                  "difference": abs(a.value - b.value)}
    else:
        r = divdiff_report(s, f, method, axis_order, box)
        result = {"value": r.value, "scale": r.scale}
    result["order"] = list(s.order)
    return "computed", {"method": method, "axis_order": axis_order}, result, \
        "multiple divided difference of f over the point system"


def run_certify(job: Job):
    doc = job.doc
    n = _order(doc["n"])
    box = box_from_json(doc["box"])
    f = job.function("f", n.d)
    sampler = doc.get("sampler", "random")
    sep = float(doc.get("separation", 1e-3))
    cert = certify_box_convexity(f, n, box, sampler, job.trials, job.tol, job.seed, sep)
    return _cert_verdict(cert), {"sampler": sampler, "separation": sep}, cert.to_json(), \
        "box-n-convexity: all order-n multiple divided differences are nonnegative"


def run_interpolate(job: Job):
    doc = job.doc
    nodes = [tuple(float(v) for v in u) for u in doc["nodes"]]
    axis = doc.get("axis")
    rng = np.random.default_rng(job.seed)
    if axis is None:
        f = job.function("f", len(nodes))
        W = grid_interpolant(f, nodes)
        lo, hi = _probe_box(nodes, None)
        P = _hyperplane_probes(nodes, rng, 20, lo, hi)
    else:
        f = job.function("f")
        u = nodes[0] if len(nodes) == 1 else nodes[axis - 1]
        W = lagrange_slice_interpolant(f, int(axis), u)
        full = [()] * f.arity
        full[axis - 1] = u
        lo, hi = np.full(f.arity, min(u) - 1.0), np.full(f.arity, max(u) + 1.0)
        P = _hyperplane_probes(full, rng, 20, lo, hi, [axis - 1])
    resid = float(np.max(np.abs(f.values(P) - W.values(P)))) if P.size else 0.0
    result = {"pseudopoly": W.to_json(), "degree": list(W.degree), "hyperplane_residual": resid,
              "hyperplane_probes": int(P.shape[0])}
    if "probes" in doc:
        Q = np.asarray(doc["probes"], dtype=float)
        result["probes"] = [{"x": q.tolist(), "W": w, "f": v}
                            for q, w, v in zip(Q, W.values(Q).tolist(), f.values(Q).tolist())]
    return "computed", {"axis": axis}, result, \
        "pseudo-polynomial interpolant agreeing with f on every node hyperplane"


def run_regularize(job: Job):
    doc = job.doc
    n = _order(doc["n"])
    box = box_from_json(doc["box"]) if "box" in doc else None
    f = job.function("f", n.d)
    nodes = doc.get("nodes") or default_nodes(box, n)
    nodes = [tuple(float(v) for v in u) for u in nodes]
    g = regularize(f, n, nodes, box)
    lo, hi = _probe_box(nodes, box)
    P = _hyperplane_probes(nodes, np.random.default_rng(job.seed), 100, lo, hi)
    result = {"g": g.to_json(), "hyperplane_max_abs": float(np.max(np.abs(g.values(P)))),
              "hyperplane_probes": int(P.shape[0])}
    if "probes" in doc:
        Q = np.asarray(doc["probes"], dtype=float)
        result["probes"] = [{"x": q.tolist(), "g": v} for q, v in zip(Q, g.values(Q).tolist())]
    verdict = "computed"
    if box is not None:
        cert = certify_box_convexity(g, n, box, "random", job.trials, job.tol, job.seed)
        result["certificate"] = cert.to_json()
        verdict = _cert_verdict(cert)
    return verdict, {"nodes": [list(u) for u in nodes]}, result, \
        "f minus its grid interpolant vanishes on the node hyperplanes and keeps box-n-convexity"


def run_order(job: Job):
    doc = job.doc
    X = job.measure(doc["X"], "X")
    Y = job.measure(doc["Y"], "Y")
    density = int(doc.get("u_grid_density", 0))
    v = check_nconvex_order(X, Y, int(doc["n"]), density)
    return ("holds" if v.holds else "fails"), {"u_grid_density": density}, v.to_json(), \
        "X <= Y in the n-convex order: matching moments 1..n and truncated-power dominance"


def run_box_order(job: Job):
    doc = job.doc
    n = _order(doc["n"])
    if "factors" in doc:
        factors = [job.measure(m, f"factors[{i}]") for i, m in enumerate(doc["factors"])]
        v = check_box_order_product(factors, n)
        mode, stmt = "product", "product signed measure integrates every box-n-convex function to >= 0"
    else:
        PX = job.measure(doc["PX"], "PX")
        PY = job.measure(doc["PY"], "PY")
        v = check_box_order_joint(PX, PY, n, doc.get("u_grid"))
        mode, stmt = "joint", "PX <= PY in the box-n-convex order"
    return ("holds" if v.holds else "fails"), {"mode": mode, "u_grid": doc.get("u_grid")}, v.to_json(), stmt


def _gap_verdict(rep, tol):
    scale = max(1.0, math.fsum(abs(e) for e in rep.contributions.values()))
    return "holds" if rep.value >= -tol * scale else "fails"


def run_hh(job: Job):
    doc = job.doc
    f = job.function("f", len(doc["a"]))
    which = doc.get("which", "first")
    rep = hh_check(f, doc["a"], doc["b"], which, job.resolution)
    return _gap_verdict(rep, job.tol), {"which": which}, rep.to_json(), rep.statement


def run_jensen(job: Job):
    doc = job.doc
    marg = [job.measure(m, f"marginals[{i}]") for i, m in enumerate(doc["marginals"])]
    f = job.function("f", len(marg))
    rep = jensen_gap(f, marg)
    return _gap_verdict(rep, job.tol), {}, rep.to_json(), rep.statement


def run_rasa(job: Job):
    doc = job.doc
    mus = [job.measure(m, f"mu[{i}]") for i, m in enumerate(doc["mu"])]
    nus = [job.measure(m, f"nu[{i}]") for i, m in enumerate(doc["nu"])]
    v = rasa_check(mus, nus, _order(doc["n"]), doc.get("A_grid"))
    return ("holds" if v.holds else "fails"), {"A_grid": doc.get("A_grid")}, v.to_json(), \
        "product of convolution powers (nu_i - mu_i)^(*n_i) is nonnegative on box-n-convex functions"


def run_synth(job: Job):
    doc = job.doc
    spec = representation_from_json(doc["spec"])
    f = synthesize(spec)
    result = {"f": f.to_json()}
    if "probes" in doc:
        Q = np.asarray(doc["probes"], dtype=float).reshape(-1, spec.d)
        result["values"] = [{"x": q.tolist(), "f": v} for q, v in zip(Q, f.values(Q).tolist())]
    verdict = "computed"
    if "box" in doc:
        cert = certify_box_convexity(f, spec.n, box_from_json(doc["box"]), "random",
                                     job.trials, job.tol, job.seed)
        result["certificate"] = cert.to_json()
        verdict = _cert_verdict(cert)
    return verdict, {"mode": "canonical" if spec.canonical else "permissive"}, result, \
        "pseudo-polynomial plus nonnegative representing measures gives a box-n-convex function"


def run_extract(job: Job):
    doc = job.doc
    spec = representation_from_json(doc["spec"])
    rects = grid_rectangles(doc["edges"]) if "edges" in doc else doc["probes"]
    masses, mu = roundtrip_extract(spec, rects)
    result = {"masses": [{"rect": [list(s) for s in r], "mass": m} for r, m in zip(rects, masses)],
              "measure": mu.to_json()}
    return "computed", {"rectangles": len(rects)}, result, \
        "rectangle masses of a box-monotone function recover its representing measure"


def run_decompose(job: Job):
    doc = job.doc
    alpha = doc["alpha"]
    alpha = [float(alpha)] if not isinstance(alpha, list) else [float(a) for a in alpha]
    f = job.function("f", len(alpha))
    if isinstance(f, FV1Function):
        if len(alpha) != 1:
            raise SchemaError("a one-variable function needs a scalar anchor", "alpha")
        f_L, f_R, f_c = fv1_decompose(f, alpha[0])
        parts = {"L": f_L, "R": f_R, "c": f_c}
        left = ["L"]
    elif isinstance(f, TensorFVFunction):
        parts = tensor_decompose(f, alpha, doc.get("axis_order"))
        left = [b for b in parts if "L" in b]
    else:
        raise SchemaError("decompose needs an fv1 or tensor_fv function", "f")
    d = len(alpha)
    if "probes" in doc:
        P = np.asarray(doc["probes"], dtype=float).reshape(-1, d)
    else:
        rng = np.random.default_rng(job.seed)
        P = rng.uniform(np.array(alpha) - 2.0, np.array(alpha) + 2.0, size=(200, d))
    total = sum(p.values(P) for p in parts.values())
    fv = f.values(P)
    resid = float(np.max(np.abs(total - fv)))
    scale = max(1.0, float(np.max(np.abs(fv))))
    # an L-part vanishes whenever some L-axis coordinate equals its anchor
    at_alpha = {}
    for b in left:
        Q = P.copy()
        for j, c in enumerate(b):
            if c == "L":
                Q[:, j] = alpha[j]
        at_alpha[b] = float(np.max(np.abs(parts[b].values(Q))))
    ok = resid <= job.tol * scale and all(v <= job.tol * scale for v in at_alpha.values())
    result = {"parts": {b: p.to_json() for b, p in parts.items()}, "sum_residual": resid,
              "L_parts_at_anchor": at_alpha, "probes": int(P.shape[0])}
    return ("holds" if ok else "fails"), {"axis_order": doc.get("axis_order"), "alpha": alpha}, result, \
        "finite-variation function splits into left-continuous, right-continuous and continuous parts"


def run_strong(job: Job):
    doc = job.doc
    n = _order(doc["n"])
    f = job.function("f", n.d)
    sampler = doc.get("sampler", "random")
    cert = strongly_convex_check(f, float(doc["C"]), n, box_from_json(doc["box"]), job.trials,
                                 job.tol, job.seed, sampler)
    return _cert_verdict(cert), {"C": float(doc["C"]), "sampler": sampler}, cert.to_json(), \
        "strong box-n-convexity: f - C * prod x_i^n_i is box-n-convex"


HANDLERS = {
    "divdiff": run_divdiff, "certify": run_certify, "interpolate": run_interpolate,
    "regularize": run_regularize, "order": run_order, "box-order": run_box_order, "hh": run_hh,
    "jensen": run_jensen, "rasa": run_rasa, "synth": run_synth, "extract-measure": run_extract,
    "decompose": run_decompose, "strong": run_strong,
}
assert set(HANDLERS) == set(COMMANDS)


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def dump(report) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dispatch(command: str, text: str, seed=0, tol=1e-9, trials=500, resolution=8) -> tuple[int, dict]:
    """Run one command on a JSON string; return (exit code, report)."""
    base = {"command": command,
            "config": {"seed": seed, "tol": tol, "trials": trials, "resolution": resolution}}
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return 2, {**base, "verdict": "input-error",
                   "error": {"kind": "json", "message": exc.msg, "line": exc.lineno,
                             "column": exc.colno, "position": exc.pos}}
    try:
        schemas.validate(command, doc)
        job = Job(command, doc, seed, tol, trials, resolution)
        verdict, extra, result, statement = HANDLERS[command](job)
    except SchemaError as exc:
        err = {"kind": "schema", "message": str(exc), "path": exc.path}
        if isinstance(exc.__cause__, ParseError):
            err.update(kind="parse", position=exc.__cause__.position)
        return 2, {**base, "verdict": "input-error", "error": err}
    except ParseError as exc:
        return 2, {**base, "verdict": "input-error",
                   "error": {"kind": "parse", "message": str(exc), "position": exc.position}}
    except BoxConvexError as exc:
        return 2, {**base, "verdict": "input-error",
                   "error": {"kind": type(exc).__name__, "message": str(exc)}}
    except (KeyError, TypeError, ValueError) as exc:
        # leftovers the schema does not pin down (wrong nesting inside a function form, ...)
        return 2, {**base, "verdict": "input-error",
                   "error": {"kind": type(exc).__name__, "message": str(exc)}}
    config = dict(job.config)
    config.update(extra)
    return EXIT[verdict], {"command": command, "config": config, "input": doc, "verdict": verdict,
                           "result": result, "statement": statement}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", default="-", help="JSON input file, or - for stdin")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    common.add_argument("--tol", type=float, default=DEFAULTS["tol"])
    common.add_argument("--trials", type=int, default=DEFAULTS["trials"])
    common.add_argument("--resolution", type=int, default=DEFAULTS["resolution"],
                        help="Gauss-Legendre points per uniform marginal")
    p = argparse.ArgumentParser(prog="boxconvex", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    sc = sub.add_parser("schema", help="print the input schema of a command")
    sc.add_argument("name", choices=COMMANDS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(dump(schemas.SCHEMAS[args.name]))
        return 0
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        print(f"boxconvex: cannot read input: {exc}", file=sys.stderr)
        return 2
    code, report = dispatch(args.command, text, args.seed, args.tol, args.trials, args.resolution)
    out = dump(report)
    if code == 2:
        err = report["error"]
        where = f"line {err['line']} column {err['column']}" if "line" in err else ""
        print(f"boxconvex {args.command}: {err['message']}" + (f" [{where}]" if where else ""),
              file=sys.stderr)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
