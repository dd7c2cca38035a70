"""One-dimensional and multiple divided differences, and the sampling certifier.

Two independent routes compute a multiple divided difference:

* ``nested``: the Newton recursion applied one axis at a time, in any axis order;
* ``expanded``: the closed sum  sum_j f(x_{1j_1},...,x_{dj_d}) / prod_i prod_{l != j_i} (x_{ij_i} - x_{il}).

Both are vectorised over a batch of point systems: a batch is a list of ``d``
arrays, array ``i`` of shape ``(T, n_i + 1)``.  The expanded route also returns
the magnitude of its largest term, which is the scale cancellation happens at;
tolerances in this module are relative to that scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Box, MultiIndex, PointSystem, validate_point_system
from .errors import DomainError, PointSystemError, PreconditionError
from .exprfn import FunctionSpec

METHODS = ("nested", "expanded")
_BATCH_POINTS = 250_000


def _grid_values(f: FunctionSpec, nodes: Sequence[np.ndarray], magnitude: bool = False):
    """Evaluate f on the tensor grid of every system in the batch: shape (T, m_1, ..., m_d).

    With `magnitude`, also return the evaluation magnitudes on the same grid.
    """
    T = nodes[0].shape[0]
    shape = tuple(x.shape[1] for x in nodes)
    d = len(nodes)
    pts = np.empty((T,) + shape + (d,))
    for i, x in enumerate(nodes):
        view = [T] + [1] * d
        view[i + 1] = shape[i]
        pts[..., i] = x.reshape(view)
    if magnitude:
        v, m = f.values_and_magnitude(pts.reshape(-1, d))
        return v.reshape((T,) + shape), m.reshape((T,) + shape)
    return f.values(pts.reshape(-1, d)).reshape((T,) + shape)


def _newton_along(F: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    """Collapse `axis` (>= 1) of F with the Newton recursion on nodes x of shape (T, m)."""
    c = np.moveaxis(F, axis, -1).copy()
    m = x.shape[1]
    xb = x.reshape((x.shape[0],) + (1,) * (c.ndim - 2) + (m,))
    for k in range(1, m):
        c[..., : m - k] = (c[..., 1 : m - k + 1] - c[..., : m - k]) / (xb[..., k:] - xb[..., : m - k])
    return c[..., 0]


def expanded_weights(x: np.ndarray) -> np.ndarray:
    """Per-node weights 1 / prod_{l != j} (x_j - x_l); x has shape (T, m)."""
    diff = x[:, :, None] - x[:, None, :]
    m = x.shape[1]
    diff[:, np.arange(m), np.arange(m)] = 1.0
    return 1.0 / np.prod(diff, axis=2)


def _check_batch(nodes):
    for i, x in enumerate(nodes):
        if x.shape[1] > 1:
            s = np.sort(x, axis=1)
            if np.any(np.diff(s, axis=1) == 0.0):
                raise PointSystemError(f"axis {i + 1}: duplicate nodes in point system")


def batch_nested(f: FunctionSpec, nodes, axis_order=None, F=None) -> np.ndarray:
    nodes = [np.asarray(x, dtype=float) for x in nodes]
    _check_batch(nodes)
    d = len(nodes)
    order = range(d) if axis_order is None else [int(a) - 1 for a in axis_order]
    if sorted(order) != list(range(d)):
        raise DomainError(f"axis_order must be a permutation of 1..{d}")
    F = _grid_values(f, nodes) if F is None else F
    # collapse axes in the requested order; track where each original axis now lives
    alive = list(range(d))
    for a in order:
        pos = alive.index(a)
        F = _newton_along(F, nodes[a], pos + 1)
        alive.pop(pos)
    return F


def batch_expanded(f: FunctionSpec, nodes, F=None, M=None) -> tuple[np.ndarray, np.ndarray]:
    """Return (values, scale) where scale is the largest |term| of the expanded sum.

    Terms are measured with the evaluation magnitudes M (see
    FunctionSpec.values_and_magnitude), |F| when only F is supplied.
    """
    nodes = [np.asarray(x, dtype=float) for x in nodes]
    _check_batch(nodes)
    d = len(nodes)
    if F is None:
        F, M = _grid_values(f, nodes, magnitude=True)
    M = np.abs(F) if M is None else M
    W = [expanded_weights(x) for x in nodes]
    letters = "abcdefghijklmnopqrs"[:d]
    spec = "t" + letters + "," + ",".join("t" + c for c in letters) + "->t"
    value = np.einsum(spec, F, *W)
    terms = M
    for i, w in enumerate(W):
        view = [w.shape[0]] + [1] * d
        view[i + 1] = w.shape[1]
        terms = terms * np.abs(w).reshape(view)
    scale = terms.reshape(terms.shape[0], -1).max(axis=1)
    return value, scale


def divdiff_1d(points: Sequence[float], f: FunctionSpec, method: str = "nested") -> float:
    """[x_0, ..., x_n; f] for a function of one variable."""
    if f.arity != 1:
        raise DomainError("divdiff_1d needs a function of one variable")
    pts = np.asarray(points, dtype=float).reshape(1, -1)
    if pts.shape[1] < 1:
        raise PointSystemError("need at least one node")
    if len(set(pts[0].tolist())) != pts.shape[1]:
        raise PointSystemError(f"duplicate nodes in {tuple(pts[0])}")
    return divdiff_multi(PointSystem((tuple(pts[0]),)), f, method)


@dataclass(frozen=True)
class DividedDifferenceReport:
    value: float
    system: PointSystem
    method: str
    scale: float | None = None


def divdiff_report(s: PointSystem, f: FunctionSpec, method: str = "nested",
                   axis_order=None, box: Box | None = None) -> DividedDifferenceReport:
    validate_point_system(s, box, s.order)
    if s.d != f.arity:
        raise DomainError(f"point system has {s.d} axes, function has arity {f.arity}")
    nodes = [np.asarray(t, dtype=float).reshape(1, -1) for t in s.nodes]
    F, M = _grid_values(f, nodes, magnitude=True)
    value, scale = batch_expanded(f, nodes, F=F, M=M)
    if method == "nested":
        value = batch_nested(f, nodes, axis_order, F=F)
    elif method != "expanded":
        raise DomainError(f"unknown method {method!r}; use one of {METHODS}")
    return DividedDifferenceReport(float(value[0]), s, method, float(scale[0]))


def divdiff_multi(s: PointSystem, f: FunctionSpec, method: str = "nested",
                  axis_order=None, box: Box | None = None) -> float:
    """The multiple divided difference [x_1; ...; x_d; f]."""
    return divdiff_report(s, f, method, axis_order, box).value


def divdiff_right_limit(points: Sequence[float], k: int, f: FunctionSpec,
                        right_derivative: FunctionSpec) -> float:
    """Limit of [x_0, x_1, ..., x_n; f] as x_0 decreases to x_k (k is 1-based).

    Uses f at the nodes and the supplied right derivative at x_k; nothing is
    differentiated numerically.
    """
    x = [float(v) for v in points]
    n = len(x)
    if n < 2:
        raise PreconditionError("need at least two nodes")
    if len(set(x)) != n:
        raise PointSystemError(f"duplicate nodes in {tuple(x)}")
    if not 1 <= k <= n:
        raise DomainError(f"k must be in 1..{n}")
    k -= 1
    fx = f.values(np.asarray(x).reshape(-1, 1))

    def omega(j):
        return math.prod(x[j] - x[i] for i in range(n) if i != j)

    base = fx[k] / omega(k)
    total = right_derivative(x[k]) / omega(k)
    for j in range(n):
        if j != k:
            total += (fx[j] / omega(j) + base) / (x[j] - x[k])
    return float(total)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _finite_axis(box: Box, i: int):
    a, b = box.lower[i], box.upper[i]
    if not (math.isfinite(a) and math.isfinite(b)):
        raise PreconditionError(f"axis {i + 1} is unbounded; the sampler needs a finite box")
    return a, b


def sample_random(rng: np.random.Generator, box: Box, n: MultiIndex, T: int,
                  separation: float = 1e-3) -> list:
    """T random systems; nodes sorted, interior, pairwise gap >= separation * width."""
    out = []
    for i, ni in enumerate(n):
        a, b = _finite_axis(box, i)
        w = b - a
        m = ni + 1
        if (m + 1) * separation >= 1.0:
            raise PreconditionError(f"axis {i + 1}: cannot fit {m} nodes at separation {separation}")
        x = np.sort(rng.uniform(a, b, size=(T, m)), axis=1)
        for _ in range(1000):
            bad = np.zeros(T, dtype=bool)
            if m > 1:
                bad |= np.any(np.diff(x, axis=1) < separation * w, axis=1)
            bad |= np.any(x <= a, axis=1) | np.any(x >= b, axis=1)
            if not bad.any():
                break
            x[bad] = np.sort(rng.uniform(a, b, size=(int(bad.sum()), m)), axis=1)
        else:
            raise PreconditionError(f"axis {i + 1}: could not draw separated nodes")
        out.append(x)
    return out


def sample_grid(rng: np.random.Generator, box: Box, n: MultiIndex, T: int,
                points_per_axis: int = 16) -> list:
    """T systems whose nodes are random subsets of a fixed interior lattice."""
    out = []
    for i, ni in enumerate(n):
        a, b = _finite_axis(box, i)
        G = max(points_per_axis, ni + 1)
        lattice = a + (np.arange(G) + 0.5) * (b - a) / G
        idx = np.sort(np.argsort(rng.random((T, G)), axis=1)[:, : ni + 1], axis=1)
        out.append(lattice[idx])
    return out


@dataclass
class ConvexityCertificate:
    verdict: str  # "certified-on-samples" | "refuted"
    trials: int
    min_value: float
    witness: PointSystem | None = None
    witness_value: float | None = None
    tol: float = 1e-9
    sampler: str = "random"
    seed: int = 0

    @property
    def certified(self) -> bool:
        return self.verdict == "certified-on-samples"

    def to_json(self):
        return {
            "verdict": self.verdict,
            "trials": self.trials,
            "min_value": self.min_value,
            "witness": None if self.witness is None else self.witness.to_json(),
            "witness_value": self.witness_value,
            "tol": self.tol,
            "sampler": self.sampler,
            "seed": self.seed,
        }


def _batches(f, box, n, sampler, trials, seed, separation):
    rng = np.random.default_rng(seed)
    per = max(1, _BATCH_POINTS // max(1, math.prod(v + 1 for v in n)))
    done = 0
    while done < trials:
        T = min(per, trials - done)
        if sampler == "random":
            nodes = sample_random(rng, box, n, T, separation)
        elif sampler == "grid":
            nodes = sample_grid(rng, box, n, T)
        else:
            raise DomainError(f"unknown sampler {sampler!r}")
        value, scale = batch_expanded(f, nodes)
        yield nodes, value, scale
        done += T


def certify_box_convexity(f: FunctionSpec, n, box: Box, sampler: str = "random",
                          trials: int = 500, tol: float = 1e-9, seed: int = 0,
                          separation: float = 1e-3) -> ConvexityCertificate:
    """Sample `trials` point systems and look for a negative order-n divided difference.

    A system refutes when its value is below ``-tol * scale``.  Passing every
    sample is evidence, not proof; the verdict string says so.
    """
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    if box.d != n.d or f.arity != n.d:
        raise DomainError("function arity, order and box dimension must agree")
    min_value, witness, witness_value = math.inf, None, None
    for nodes, value, scale in _batches(f, box, n, sampler, trials, seed, separation):
        min_value = min(min_value, float(value.min()))
        bad = np.flatnonzero(value < -tol * scale)
        if bad.size:
            j = bad[np.argmin(value[bad])]
            if witness_value is None or value[j] < witness_value:
                witness_value = float(value[j])
                witness = PointSystem(tuple(tuple(x[j]) for x in nodes))
    verdict = "refuted" if witness is not None else "certified-on-samples"
    return ConvexityCertificate(verdict, trials, min_value, witness, witness_value, tol, sampler, seed)


def check_box_affine(f: FunctionSpec, n, box: Box, trials: int = 200, tol: float = 1e-9,
                     seed: int = 0, sampler: str = "random") -> bool:
    """True iff every sampled order-n difference is zero up to ``tol * scale``."""
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    for _, value, scale in _batches(f, box, n, sampler, trials, seed, 1e-3):
        if np.any(np.abs(value) > tol * scale):
            return False
    return True
