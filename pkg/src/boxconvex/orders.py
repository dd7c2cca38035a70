"""Convex-order verdicts for discrete measures.

* 1-d n-convex order X <= Y: equal moments 1..n and
  g(t) = E(Y - t)_+^n - E(X - t)_+^n >= 0 for all t.
* positivity of a zero-mass signed measure against n-convex functions.
* box-n-convex order for a signed product measure (sign classes + parity) and
  for a joint pair of discrete distributions (projected cancellation + spline
  dominance).

Piecewise-polynomial signs are decided exactly via :mod:`.piecewise`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import AxisSubset, MultiIndex, all_subsets
from .errors import DomainError, PreconditionError
from .exprfn import tpow
from .measures import DiscreteSignedMeasure
from .piecewise import SignClass, TruncatedProfile, classify_profile

MOMENT_TOL = 1e-9
SIGN_TOL = 1e-9
PRUNE_TOL = 1e-12


@dataclass
class OrderVerdict:
    holds: bool
    failed_condition: str = "none"  # none | moment | spline | parity
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {"holds": self.holds, "failed_condition": self.failed_condition,
                "detail": _jsonable(self.detail)}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, SignClass):
        return v.to_json()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _moment_residual(m: DiscreteSignedMeasure, k: int) -> tuple[float, float]:
    """(sum w x^k, sum |w| |x|^k) of a 1-d measure."""
    if m.is_zero():
        return 0.0, 0.0
    xk = m.support ** float(k)
    return math.fsum(m.weights * xk), math.fsum(np.abs(m.weights) * np.abs(xk))


def _moment_vanishes(m, k) -> bool:
    r, scale = _moment_residual(m, k)
    return abs(r) <= MOMENT_TOL * max(scale, 1e-300) or r == 0.0


def _difference(Y: DiscreteSignedMeasure, X: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    """Y - X with atoms that only survive as roundoff (|w| <= 1e-12 * total variation) removed."""
    g = Y - X
    if g.is_zero():
        return g
    keep = np.abs(g.weights) > PRUNE_TOL * (Y.total_variation() + X.total_variation())
    return DiscreteSignedMeasure(g.locations[keep], g.weights[keep], g.dim)


def _require_probability(m: DiscreteSignedMeasure, name: str, dim: int = 1):
    if m.dim != dim:
        raise PreconditionError(f"{name} must be {dim}-dimensional")
    if not m.is_probability(1e-9):
        raise PreconditionError(f"{name} must be a probability measure (nonnegative weights, mass 1)")


def _extra_probes(profile: TruncatedProfile, density: int) -> np.ndarray:
    xs = profile.x
    if density <= 0 or xs.size < 2:
        return np.zeros(0)
    t = (np.arange(1, density + 1) / (density + 1))[None, :]
    return (xs[:-1, None] + t * np.diff(xs)[:, None]).ravel()


def _spline_check(gamma: DiscreteSignedMeasure, p: int, side: str, density: int):
    """Classify u -> sum w tpow(x-u, p, side)/p!, cross-checked on a dense probe grid."""
    h = TruncatedProfile(gamma, p, side)
    cls = classify_profile(h, SIGN_TOL)
    probes = _extra_probes(h, density)
    if probes.size:
        v = h(probes)
        mag = h.magnitude(probes)
        bad = v < -SIGN_TOL * mag
        if bad.any() and cls.sign == "nonneg":
            j = int(np.argmin(np.where(bad, v, np.inf)))
            cls = SignClass("mixed" if not cls.zero else "nonpos", float(probes[j]), cls.pos_witness,
                            float(v[j]), cls.pos_value)
    return cls


def check_nconvex_order(X: DiscreteSignedMeasure, Y: DiscreteSignedMeasure, n: int,
                        u_grid_density: int = 0) -> OrderVerdict:
    """Is X <= Y in the n-convex order?"""
    if n < 1:
        raise DomainError("n must be at least 1")
    _require_probability(X, "X")
    _require_probability(Y, "Y")
    gamma = _difference(Y, X)
    for k in range(1, n + 1):
        if not _moment_vanishes(gamma, k):
            return OrderVerdict(False, "moment", {"k": k, "EX^k": moment1(X, k), "EY^k": moment1(Y, k)})
    cls = _spline_check(gamma, n, "plus", u_grid_density)
    fact = math.factorial(n)
    if cls.sign != "nonneg":
        return OrderVerdict(False, "spline", {"t": cls.neg_witness, "g(t)": cls.neg_value * fact})
    detail = {"min_g": 0.0 if cls.zero else None}
    if cls.pos_witness is not None:
        detail = {"max_t": cls.pos_witness, "max_g": cls.pos_value * fact}
    return OrderVerdict(True, "none", detail)


def moment1(m: DiscreteSignedMeasure, k: int) -> float:
    return _moment_residual(m, k)[0]


def check_signed_positive(gamma: DiscreteSignedMeasure, n: int, u_grid_density: int = 0) -> OrderVerdict:
    """Is the integral of every n-convex function against gamma nonnegative?

    gamma must have zero total mass.  The plus-side profile (x-u)_+^n decides; the
    minus-side profile (-1)^(n+1) (x-u)_-^n is evaluated too and reported.
    """
    if gamma.dim != 1:
        raise DomainError("gamma must be 1-dimensional")
    if not _moment_vanishes(gamma, 0):
        raise PreconditionError(f"gamma must have zero total mass, got {gamma.mass()}")
    for k in range(1, n + 1):
        if not _moment_vanishes(gamma, k):
            return OrderVerdict(False, "moment", {"k": k, "moment": moment1(gamma, k)})
    plus = _spline_check(gamma, n, "plus", u_grid_density)
    minus = _spline_check(gamma, n, "minus", u_grid_density)
    if n % 2 == 1:  # (-1)^(n+1) = +1
        minus_sign = minus.sign
    else:
        minus_sign = {"nonneg": "nonpos", "nonpos": "nonneg", "mixed": "mixed"}[minus.sign]
        if minus.zero:
            minus_sign = "nonneg"
    plus_ok = plus.sign == "nonneg"
    minus_ok = minus_sign == "nonneg"
    detail = {"plus_side": plus.sign, "minus_side": minus_sign, "sides_agree": plus_ok == minus_ok}
    if not plus_ok:
        detail.update({"u": plus.neg_witness, "value": plus.neg_value * math.factorial(n)})
        return OrderVerdict(False, "spline", detail)
    return OrderVerdict(True, "none", detail)


def classify_spline_sign(gamma: DiscreteSignedMeasure, q: int) -> SignClass:
    """Sign of H(u) = integral of (x-u)_+^(q-1)/(q-1)! against gamma, over all real u."""
    if q < 1:
        raise DomainError("q must be at least 1")
    return classify_profile(TruncatedProfile(gamma, q - 1, "plus"), SIGN_TOL)


def check_box_order_product(factors: Sequence[DiscreteSignedMeasure], n) -> OrderVerdict:
    """Is the integral of every box-n-convex f against gamma_1 x ... x gamma_d nonnegative?"""
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    if len(factors) != n.d:
        raise DomainError(f"need {n.d} factors, got {len(factors)}")
    if any(v < 1 for v in n):
        raise DomainError("every n_i must be at least 1")
    for i, g in enumerate(factors, start=1):
        if g.dim != 1:
            raise DomainError(f"factor {i} must be 1-dimensional")
        if g.is_zero():
            raise PreconditionError(f"factor {i} is the zero measure")
    for i, (g, ni) in enumerate(zip(factors, n), start=1):
        for k in range(ni):
            if not _moment_vanishes(g, k):
                return OrderVerdict(False, "moment", {"axis": i, "k": k, "moment": moment1(g, k)})
    classes = [classify_spline_sign(g, ni) for g, ni in zip(factors, n)]
    detail = {"classes": [c.sign for c in classes], "factors": classes}
    for i, c in enumerate(classes, start=1):
        if c.sign == "mixed":
            detail.update({"axis": i, "neg_u": c.neg_witness, "pos_u": c.pos_witness})
            return OrderVerdict(False, "spline", detail)
    nonpos = sum(c.sign == "nonpos" for c in classes)
    detail["nonpos_count"] = nonpos
    if nonpos % 2:
        return OrderVerdict(False, "parity", detail)
    return OrderVerdict(True, "none", detail)


# ---------------------------------------------------------------------------
# Joint distributions
# ---------------------------------------------------------------------------

def _basis_factor(x: np.ndarray, u: np.ndarray, nj: int, on_A: bool) -> np.ndarray:
    """Axis factor of the spline basis for atoms x (K,) against u (G,): shape (K, G)."""
    k = nj - 1
    e = x[:, None] - u[None, :]
    if on_A:
        return (-1.0) ** nj * tpow(e, k, "minus") / math.factorial(k)
    return tpow(e, k, "plus") / math.factorial(k)


def default_u_grid(gamma: DiscreteSignedMeasure, interior: int = 2) -> list:
    """Per axis: the atom coordinates, `interior` points inside each gap, one probe outside each end."""
    grids = []
    for j in range(gamma.dim):
        xs = np.unique(gamma.locations[:, j])
        pts = [xs, [xs[0] - 1.0, xs[-1] + 1.0]]
        if xs.size > 1 and interior > 0:
            t = (np.arange(1, interior + 1) / (interior + 1))[None, :]
            pts.append((xs[:-1, None] + t * np.diff(xs)[:, None]).ravel())
        grids.append(np.unique(np.concatenate(pts)))
    return grids


def _cancellation(gamma: DiscreteSignedMeasure, n: MultiIndex):
    d = gamma.dim
    for i in range(d):
        xi = gamma.locations[:, i]
        for k in range(n[i]):
            w = gamma.weights * xi ** float(k)
            scale = math.fsum(np.abs(w)) if w.size else 0.0
            if d == 1:
                resid = np.array([math.fsum(w)]) if w.size else np.zeros(0)
                where = [()] * resid.size
            else:
                others = [a for a in range(1, d + 1) if a != i + 1]
                proj = DiscreteSignedMeasure(gamma.locations[:, [a - 1 for a in others]], w, d - 1)
                resid, where = proj.weights, [tuple(l) for l in proj.locations]
            if resid.size:
                j = int(np.argmax(np.abs(resid)))
                if abs(resid[j]) > MOMENT_TOL * max(scale, 1e-300):
                    return {"axis": i + 1, "k": k, "at": list(where[j]), "residual": float(resid[j])}
    return None


def check_box_order_signed(gamma: DiscreteSignedMeasure, n, u_grid: Sequence | None = None,
                           refine: bool = True) -> OrderVerdict:
    """Is the integral of every box-n-convex f against the d-dimensional signed measure gamma >= 0?

    Condition a): for each axis i and k < n_i, x_i^k * gamma projected away from
    axis i is the zero measure.  Condition b): for every A and u in the grid, the
    spline-basis integral is >= 0; with `refine`, each grid line parallel to an
    axis is also minimised exactly over the whole real line.
    """
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    d = gamma.dim
    if n.d != d:
        raise DomainError(f"order has {n.d} entries, measure has dimension {d}")
    if any(v < 1 for v in n):
        raise DomainError("every n_i must be at least 1")
    if gamma.is_zero():
        return OrderVerdict(True, "none", {"note": "zero measure"})
    bad = _cancellation(gamma, n)
    if bad is not None:
        return OrderVerdict(False, "moment", bad)
    grids = default_u_grid(gamma) if u_grid is None else [np.asarray(g, dtype=float) for g in u_grid]
    X = gamma.locations
    w = gamma.weights
    letters = "abcdefghij"[:d]
    spec = "k," + ",".join("k" + c for c in letters) + "->" + letters
    worst = None
    for A in all_subsets(d):
        F = [_basis_factor(X[:, j], grids[j], n[j], (j + 1) in A) for j in range(d)]
        val = np.einsum(spec, w, *F)
        mag = np.einsum(spec, np.abs(w), *[np.abs(f) for f in F])
        ratio = np.where(val < -SIGN_TOL * mag, val, np.inf)
        if np.isfinite(ratio).any():
            idx = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
            u = [float(grids[j][idx[j]]) for j in range(d)]
            cand = {"A": list(A.members), "u": u, "value": float(val[idx])}
            if worst is None or cand["value"] < worst["value"]:
                worst = cand
        if refine and worst is None:
            found = _refine_lines(X, w, n, A, F, grids)
            if found is not None:
                worst = found
    if worst is not None:
        return OrderVerdict(False, "spline", worst)
    return OrderVerdict(True, "none", {"grid_sizes": [len(g) for g in grids]})


def _refine_lines(X, w, n, A: AxisSubset, F, grids):
    """Exact minimisation along every grid line parallel to one axis."""
    d = X.shape[1]
    for j in range(d):
        others = [l for l in range(d) if l != j]
        # lines run through atom coordinates and the exterior probes of the other axes
        other_grids = [np.flatnonzero(np.isin(grids[l], X[:, l]) | (grids[l] < X[:, l].min())
                                      | (grids[l] > X[:, l].max())) for l in others]
        for idx in itertools.product(*other_grids):
            coef = w.copy()
            for l, g in zip(others, idx):
                coef = coef * F[l][:, g]
            if not np.any(coef):
                continue
            # merge atoms sharing x_j; a merged weight that cancels to roundoff is zero
            xs, inv = np.unique(X[:, j], return_inverse=True)
            merged = np.bincount(inv, weights=coef)
            size = np.bincount(inv, weights=np.abs(coef))
            merged[np.abs(merged) <= PRUNE_TOL * size] = 0.0
            line = DiscreteSignedMeasure(xs, merged)
            if line.is_zero():
                continue
            side = "minus" if (j + 1) in A else "plus"
            h = TruncatedProfile(line, n[j] - 1, side)
            # judge cancellation against the unmerged magnitudes
            absline = DiscreteSignedMeasure(xs, size)
            cls = classify_profile(h, SIGN_TOL, TruncatedProfile(absline, n[j] - 1, side))
            flip = (j + 1) in A and n[j] % 2 == 1
            sign_bad = cls.pos_witness is not None if flip else cls.neg_witness is not None
            if sign_bad:
                u = [None] * d
                for l, g in zip(others, idx):
                    u[l] = float(grids[l][g])
                if flip:
                    u[j], val = cls.pos_witness, -cls.pos_value
                else:
                    u[j], val = cls.neg_witness, cls.neg_value
                return {"A": list(A.members), "u": u, "value": float(val), "line_axis": j + 1}
    return None


def check_box_order_joint(PX: DiscreteSignedMeasure, PY: DiscreteSignedMeasure, n,
                          u_grid: Sequence | None = None, refine: bool = True) -> OrderVerdict:
    """Is E f(X) <= E f(Y) for every box-n-convex f, with X ~ PX and Y ~ PY?"""
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    _require_probability(PX, "PX", n.d)
    _require_probability(PY, "PY", n.d)
    return check_box_order_signed(_difference(PY, PX), n, u_grid, refine)


def product_pair(X: Sequence[DiscreteSignedMeasure], Y: Sequence[DiscreteSignedMeasure]):
    """Probability measures PX, PY on R^d with PY - PX = 2^(1-d) * (Y_1-X_1) x ... x (Y_d-X_d).

    PY mixes the tensor products with an even number of X-factors, PX those
    with an odd number.
    """
    d = len(X)
    if len(Y) != d or d < 1:
        raise DomainError("need the same positive number of X and Y marginals")
    if d == 1:
        return X[0], Y[0]
    even, odd = [], []
    for A in itertools.product((0, 1), repeat=d):
        m = None
        for j in range(d):
            f = X[j] if A[j] else Y[j]
            m = f if m is None else m.tensor(f)
        (odd if sum(A) % 2 else even).append(m)
    c = 2.0 ** (1 - d)

    def mix(ms):
        out = ms[0].scale(c)
        for m in ms[1:]:
            out = out + m.scale(c)
        return out

    return mix(odd), mix(even)
