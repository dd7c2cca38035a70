"""Discrete signed measures, uniform segments, and finite-variation step decompositions.

A :class:`DiscreteSignedMeasure` is a canonical list of weighted atoms: sorted
lexicographically, locations within ``MERGE_TOL`` merged, exact zero weights
dropped.  The zero measure is the empty atom list.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError, SchemaError
from .exprfn import FunctionSpec, function_from_json, register_json_kind

MERGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteSignedMeasure:
    locations: np.ndarray  # (K, dim)
    weights: np.ndarray  # (K,)
    dim: int = 1

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).reshape(-1, self.dim)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if loc.shape[0] != w.shape[0]:
            raise DomainError("need one weight per atom")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise DomainError("atom locations and weights must be finite")
        loc, w = _canonical(loc, w)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    # construction -----------------------------------------------------------
    @classmethod
    def from_atoms(cls, atoms: Sequence, dim: int | None = None) -> "DiscreteSignedMeasure":
        """atoms: iterable of (location, weight); location a number or a sequence."""
        atoms = list(atoms)
        if dim is None:
            dim = 1 if not atoms else int(np.size(atoms[0][0]))
        locs = np.array([np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in atoms]).reshape(-1, dim)
        return cls(locs, np.array([w for _, w in atoms], dtype=float), dim)

    @classmethod
    def zero(cls, dim: int = 1) -> "DiscreteSignedMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0), dim)

    # basic quantities ---------------------------------------------------------
    def __len__(self):
        return self.weights.shape[0]

    @property
    def support(self) -> np.ndarray:
        """1-d measures: sorted atom locations."""
        return self.locations[:, 0] if self.dim == 1 else self.locations

    def mass(self) -> float:
        return float(math.fsum(self.weights))

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def is_zero(self) -> bool:
        return len(self) == 0

    def is_probability(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.weights >= 0)) and abs(self.mass() - 1.0) <= tol

    def moment(self, k) -> float:
        return moment(self, k)

    def expectation(self, f: FunctionSpec) -> float:
        if self.is_zero():
            return 0.0
        return float(np.dot(self.weights, f.values(self.locations)))

    # algebra ------------------------------------------------------------------
    def scale(self, c: float) -> "DiscreteSignedMeasure":
        return DiscreteSignedMeasure(self.locations, c * self.weights, self.dim)

    def __neg__(self):
        return self.scale(-1.0)

    def __add__(self, other: "DiscreteSignedMeasure"):
        if other.dim != self.dim:
            raise DomainError("dimension mismatch")
        return DiscreteSignedMeasure(np.vstack([self.locations, other.locations]),
                                     np.concatenate([self.weights, other.weights]), self.dim)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c: float):
        return self.scale(float(c))

    def tensor(self, other: "DiscreteSignedMeasure") -> "DiscreteSignedMeasure":
        K1, K2 = len(self), len(other)
        loc = np.hstack([np.repeat(self.locations, K2, axis=0), np.tile(other.locations, (K1, 1))])
        return DiscreteSignedMeasure(loc, np.outer(self.weights, other.weights).ravel(),
                                     self.dim + other.dim)

    def project(self, axes: Sequence[int]) -> "DiscreteSignedMeasure":
        """Image under x -> x_axes (1-based axes, in the order given)."""
        idx = [int(a) - 1 for a in axes]
        if not idx:
            raise DomainError("projection needs at least one axis")
        return DiscreteSignedMeasure(self.locations[:, idx], self.weights, len(idx))

    def marginal(self, axis: int) -> "DiscreteSignedMeasure":
        return self.project([axis])

    def to_json(self):
        return {"dim": self.dim,
                "atoms": [{"x": loc.tolist() if self.dim > 1 else float(loc[0]), "w": float(w)}
                          for loc, w in zip(self.locations, self.weights)]}

    def __repr__(self):
        body = ", ".join(f"{float(w):g}@{tuple(map(float, l)) if self.dim > 1 else float(l[0])}"
                         for l, w in zip(self.locations, self.weights))
        return f"DiscreteSignedMeasure[{self.dim}]({body})"


def _canonical(loc: np.ndarray, w: np.ndarray):
    if loc.shape[0] == 0:
        return loc, w
    order = np.lexsort(loc.T[::-1])
    loc, w = loc[order], w[order]
    keep_loc, keep_w = [loc[0]], [w[0]]
    for j in range(1, loc.shape[0]):
        if np.all(np.abs(loc[j] - keep_loc[-1]) <= MERGE_TOL):
            keep_w[-1] = keep_w[-1] + w[j]
        else:
            keep_loc.append(loc[j])
            keep_w.append(w[j])
    loc, w = np.array(keep_loc), np.array(keep_w)
    nz = w != 0.0
    return loc[nz].reshape(-1, loc.shape[1]), w[nz]


def dirac(x, weight: float = 1.0) -> DiscreteSignedMeasure:
    return DiscreteSignedMeasure.from_atoms([(x, weight)])


def binomial(n: int, p: float) -> DiscreteSignedMeasure:
    """B(n, p) as atoms on {0, ..., n}."""
    if n < 0 or not 0.0 <= p <= 1.0:
        raise DomainError(f"binomial needs n >= 0 and p in [0, 1], got ({n}, {p})")
    k = np.arange(n + 1)
    w = np.array([math.comb(n, int(j)) * p ** int(j) * (1 - p) ** (n - int(j)) for j in k])
    return DiscreteSignedMeasure(k.astype(float), w)


def convolve(m1: DiscreteSignedMeasure, m2: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    """Convolution of 1-d measures: atoms at all pairwise sums, weights multiplied."""
    if m1.dim != 1 or m2.dim != 1:
        raise DomainError("convolve works on 1-dimensional measures")
    loc = (m1.support[:, None] + m2.support[None, :]).ravel()
    return DiscreteSignedMeasure(loc, np.outer(m1.weights, m2.weights).ravel())


def convolve_power(m: DiscreteSignedMeasure, q: int) -> DiscreteSignedMeasure:
    if q < 1:
        raise DomainError("convolution power needs q >= 1")
    out = m
    for _ in range(q - 1):
        out = convolve(out, m)
    return out


def moment(m: DiscreteSignedMeasure, k) -> float:
    """sum_w w * prod_j x_j**k_j; an integer k means the same exponent on a 1-d measure."""
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if ks.shape[0] != m.dim:
        raise DomainError(f"exponent {tuple(ks)} does not match dimension {m.dim}")
    if m.is_zero():
        return 0.0
    return float(math.fsum(m.weights * np.prod(m.locations ** ks.astype(float), axis=1)))


def truncated_power_moment(m: DiscreteSignedMeasure, u: float, q: int, side: str = "plus") -> float:
    """sum w * (x - u)_+^q  (or (x - u)_-^q), with 0**0 = 1."""
    from .exprfn import tpow

    if m.dim != 1:
        raise DomainError("truncated power moments are for 1-d measures")
    if q < 0:
        raise DomainError("q must be nonnegative")
    if m.is_zero():
        return 0.0
    vals = tpow(m.support - float(u), q, side)
    return float(math.fsum(m.weights * vals))


def survival(m: DiscreteSignedMeasure, x: float) -> float:
    """m([x, inf))."""
    if m.dim != 1:
        raise DomainError("survival is for 1-d measures")
    return float(math.fsum(m.weights[m.support >= x]))


_GL8 = np.polynomial.legendre.leggauss(8)


def survival_convolution(taus: Sequence[DiscreteSignedMeasure], A: float) -> float:
    """(S_1 * ... * S_q)(A) with S_i(x) = tau_i([x, inf)), by direct piecewise quadrature.

    Every S_i is a compactly supported step function (each tau_i must have zero
    mass), so the integrand is polynomial between breakpoints and 8-point
    Gauss-Legendre on each piece is exact for q <= 9.
    """
    taus = list(taus)
    for t in taus:
        if abs(t.mass()) > 1e-12 * max(1.0, t.total_variation()):
            raise PreconditionError("survival convolution needs zero-mass factors")
    return _surv_conv(taus, float(A))


def _sum_support(taus):
    pts = np.zeros(1)
    for t in taus:
        pts = np.unique((pts[:, None] + t.support[None, :]).ravel())
    return pts


def _tail_sums(t):
    """Sorted support and suffix sums: S(x) = tail[searchsorted(support, x)]."""
    w = t.weights
    tail = np.array([math.fsum(w[k:]) for k in range(w.size)] + [0.0])
    return t.support, tail


def _surv_conv(taus, A):
    if len(taus) == 1:
        return survival(taus[0], A)
    return _surv_rec([_tail_sums(t) for t in taus], _sum_supports(taus), A)


def _sum_supports(taus):
    return [_sum_support(taus[k:]) for k in range(len(taus))]


def _surv_rec(tables, sums, A):
    (supp, tail), rest = tables[0], tables[1:]
    if supp.size == 0 or any(s.size == 0 for s, _ in rest):
        return 0.0
    bp = np.unique(np.concatenate([supp, A - sums[1]]))
    lo, hi = supp[0], supp[-1]
    bp = bp[(bp >= lo) & (bp <= hi)]
    bp = np.unique(np.concatenate([[lo, hi], bp]))
    a, b = bp[:-1], bp[1:]
    nodes, weights = _GL8
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    head = tail[np.searchsorted(supp, t, side="left")]
    if len(rest) == 1:
        s2, tail2 = rest[0]
        inner = tail2[np.searchsorted(s2, A - t, side="left")]
    else:
        inner = np.array([_surv_rec(rest, sums[1:], A - v) for v in t.ravel()]).reshape(t.shape)
    return float(np.sum(half[:, None] * weights[None, :] * head * inner))


@dataclass(frozen=True)
class UniformSegment:
    """Uniform probability on [a, b], integrated by composite Gauss-Legendre.

    `m` is the number of points per panel; the segment is split in `panels` equal panels.
    """

    a: float
    b: float
    m: int = 8
    panels: int = 1

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"uniform segment needs a < b, got [{self.a}, {self.b}]")
        if self.m < 2:
            raise DomainError("quadrature resolution must be at least 2")
        if self.panels < 1:
            raise DomainError("need at least one panel")

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.m)
        edges = np.linspace(self.a, self.b, self.panels + 1)
        nodes, weights = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)
            weights.append(0.5 * w * (hi - lo) / (self.b - self.a))
        return np.concatenate(nodes), np.concatenate(weights)

    def as_measure(self) -> DiscreteSignedMeasure:
        x, w = self.quadrature()
        return DiscreteSignedMeasure(x, w)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def with_resolution(self, m: int) -> "UniformSegment":
        return UniformSegment(self.a, self.b, m, self.panels)

    def to_json(self):
        return {"uniform": {"a": self.a, "b": self.b, "m": self.m, "panels": self.panels}}


def measure_from_json(doc, path: str = "measure", resolution: int | None = None):
    """Parse atoms / uniform / binomial JSON into a measure object."""
    if not isinstance(doc, dict):
        raise SchemaError("measure must be a JSON object", path)
    if "atoms" in doc:
        dim = int(doc.get("dim", 1))
        atoms = []
        for j, a in enumerate(doc["atoms"]):
            try:
                x = a["x"]
                if np.size(x) != dim:
                    raise SchemaError(f"atom location has dimension {np.size(x)}, expected {dim}",
                                      f"{path}.atoms[{j}].x")
                atoms.append((x, float(a["w"])))
            except (KeyError, TypeError) as exc:
                raise SchemaError("atom needs fields x and w", f"{path}.atoms[{j}]") from exc
        return DiscreteSignedMeasure.from_atoms(atoms, dim)
    if "uniform" in doc:
        u = doc["uniform"]
        m = int(u.get("m", resolution or 8))
        return UniformSegment(float(u["a"]), float(u["b"]), m, int(u.get("panels", 1)))
    if "binomial" in doc:
        return binomial(int(doc["binomial"]["n"]), float(doc["binomial"]["p"]))
    raise SchemaError("expected one of: atoms, uniform, binomial", path)


# ---------------------------------------------------------------------------
# Rectangle masses
# ---------------------------------------------------------------------------

def corner_points(rect: Sequence[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    """Corners y_B (coordinate y_j for j in B, z_j otherwise) and signs (-1)^|B|."""
    d = len(rect)
    pts, signs = [], []
    for B in itertools.product((0, 1), repeat=d):
        pts.append([rect[j][0] if B[j] else rect[j][1] for j in range(d)])
        signs.append(-1.0 if sum(B) % 2 else 1.0)
    return np.array(pts), np.array(signs)


def rectangle_mass(f: FunctionSpec, rect: Sequence[Sequence[float]], b: Sequence[str] | None = None) -> float:
    """Alternating corner sum of f over the rectangle prod_j [y_j, z_j].

    For a box-monotone f this is the mass its representing measure gives to the
    half-open rectangle whose sides are (y_j, z_j] on r-axes and [y_j, z_j) on L-axes.
    """
    if len(rect) != f.arity:
        raise DomainError(f"rectangle has {len(rect)} sides, function has arity {f.arity}")
    for j, (y, z) in enumerate(rect):
        if not y < z:
            raise DomainError(f"degenerate rectangle on axis {j + 1}: [{y}, {z}]")
    if b is not None and (len(b) != len(rect) or any(s not in ("L", "r") for s in b)):
        raise DomainError(f"side pattern must be a string over L/r of length {len(rect)}")
    pts, signs = corner_points(rect)
    return float(math.fsum(signs * f.values(pts)))


def grid_rectangles(edges: Sequence[Sequence[float]]) -> list:
    """All cells of the tensor grid with the given per-axis edges."""
    per_axis = [list(zip(e[:-1], e[1:])) for e in edges]
    return [list(cell) for cell in itertools.product(*per_axis)]


# ---------------------------------------------------------------------------
# Finite-variation step functions and their L / R / continuous split
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FV1Function(FunctionSpec):
    """f(x) = smooth(x) + offset + sum_t [a_t 1{x >= t} + b_t 1{x > t}].

    a_t = f(t) - f(t-) is the jump from the left, b_t = f(t+) - f(t) the jump to the right.
    `smooth` may be None (meaning 0).
    """

    smooth: FunctionSpec | None = None
    jumps: tuple = ()
    offset: float = 0.0
    arity: int = field(default=1, init=False)

    def __post_init__(self):
        jumps = tuple(sorted((float(t), float(a), float(b)) for t, a, b in self.jumps))
        jumps = tuple(j for j in jumps if j[1] != 0.0 or j[2] != 0.0)
        locs = [t for t, _, _ in jumps]
        if len(set(locs)) != len(locs):
            raise DomainError("jump locations must be distinct")
        if self.smooth is not None and self.smooth.arity != 1:
            raise DomainError("smooth part must be a function of one variable")
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "offset", float(self.offset) + 0.0)

    def _values(self, X):
        x = X[:, 0]
        # step part from correctly rounded prefix sums, so a decomposition part that
        # cancels to zero on an interval evaluates to exactly zero there
        t = np.array([j[0] for j in self.jumps])
        terms, between, at = [], [], []
        for _, a, b in self.jumps:
            at.append(self.offset + math.fsum(terms + [a]))
            terms += [a, b]
            between.append(self.offset + math.fsum(terms))
        levels = np.array([self.offset] + between)
        i = np.searchsorted(t, x, side="left")  # jumps strictly left of x
        out = levels[i]
        hit = (i < t.size) & (t[np.minimum(i, max(t.size - 1, 0))] == x) if t.size else np.zeros(x.shape, bool)
        if hit.any():
            out = np.where(hit, np.array(at + [0.0])[i], out)
        if self.smooth is not None:
            out = out + self.smooth.values(X)
        return out

    def to_json(self):
        return {"fv1": {"smooth": None if self.smooth is None else self.smooth.to_json(),
                        "jumps": [{"t": t, "left": a, "right": b} for t, a, b in self.jumps],
                        "offset": self.offset}}

    def __repr__(self):
        return f"FV1Function(smooth={self.smooth!r}, jumps={self.jumps}, offset={self.offset})"


@register_json_kind("fv1")
def _read_fv1(doc, arity, path):
    body = doc["fv1"]
    smooth = body.get("smooth")
    smooth = None if smooth is None else function_from_json(smooth, 1, f"{path}.fv1.smooth")
    jumps = tuple((j["t"], j.get("left", 0.0), j.get("right", 0.0)) for j in body.get("jumps", ()))
    return FV1Function(smooth, jumps, body.get("offset", 0.0))


def fv1_decompose(f: FV1Function, alpha: float) -> tuple[FV1Function, FV1Function, FV1Function]:
    """Split f = f_L + f_R + f_c at alpha.

    f_L(x) = sum_t b_t (1{alpha <= t < x} - 1{x <= t < alpha})  (left-continuous, f_L(alpha) = 0)
    f_R(x) = sum_t a_t (1{alpha < t <= x} - 1{x < t <= alpha})  (right-continuous, f_R(alpha) = 0)
    f_c = f - f_L - f_R is continuous.
    """
    alpha = float(alpha)
    for t, _, _ in f.jumps:
        if t == alpha:
            raise PreconditionError(f"anchor {alpha} sits on a jump of f; choose another anchor")
    below = [(t, a, b) for t, a, b in f.jumps if t < alpha]
    f_L = FV1Function(None, tuple((t, 0.0, b) for t, _, b in f.jumps),
                      -math.fsum(b for _, _, b in below))
    f_R = FV1Function(None, tuple((t, a, 0.0) for t, a, _ in f.jumps),
                      -math.fsum(a for _, a, _ in below))
    f_c = FV1Function(f.smooth, (), f.offset + math.fsum(a + b for _, a, b in below))
    return f_L, f_R, f_c


def _r_part(f: FV1Function, alpha: float) -> FV1Function:
    _, f_R, f_c = fv1_decompose(f, alpha)
    return FV1Function(f_c.smooth, f_R.jumps, f_c.offset + f_R.offset)


@dataclass(frozen=True, eq=False)
class TensorFVFunction(FunctionSpec):
    """sum_k c_k prod_j phi_kj(x_j) with every phi_kj an FV1Function."""

    terms: tuple
    arity: int

    def __post_init__(self):
        terms = tuple((float(c), tuple(fs)) for c, fs in self.terms)
        for c, fs in terms:
            if len(fs) != self.arity:
                raise DomainError(f"each term needs {self.arity} factors")
            if not math.isfinite(c):
                raise DomainError("coefficients must be finite")
        object.__setattr__(self, "terms", terms)

    def _values(self, X):
        out = np.zeros(X.shape[0])
        for c, fs in self.terms:
            prod = np.full(X.shape[0], c)
            for j, phi in enumerate(fs):
                prod = prod * phi.values(X[:, [j]])
            out = out + prod
        return out

    def to_json(self):
        return {"tensor_fv": [{"c": c, "factors": [phi.to_json() for phi in fs]} for c, fs in self.terms],
                "arity": self.arity}


@register_json_kind("tensor_fv")
def _read_tensor_fv(doc, arity, path):
    terms = []
    for k, item in enumerate(doc["tensor_fv"]):
        fs = [function_from_json(phi, 1, f"{path}.tensor_fv[{k}].factors[{j}]")
              for j, phi in enumerate(item["factors"])]
        for j, phi in enumerate(fs):
            if not isinstance(phi, FV1Function):
                raise SchemaError("factors must be fv1 functions", f"{path}.tensor_fv[{k}].factors[{j}]")
        terms.append((item.get("c", 1.0), tuple(fs)))
    d = arity if arity is not None else len(terms[0][1])
    return TensorFVFunction(tuple(terms), d)


def axis_part(f: TensorFVFunction, axis: int, side: str, alpha: float) -> TensorFVFunction:
    """Apply the per-axis operator: keep only the L (or r = R + continuous) part of axis `axis`."""
    i = axis - 1
    terms = []
    for c, fs in f.terms:
        phi = fs[i]
        part = fv1_decompose(phi, alpha)[0] if side == "L" else _r_part(phi, alpha)
        terms.append((c, fs[:i] + (part,) + fs[i + 1:]))
    return TensorFVFunction(tuple(terms), f.arity)


def tensor_decompose(f: TensorFVFunction, alpha: Sequence[float],
                     axis_order: Sequence[int] | None = None) -> dict:
    """Map every pattern b in {L, r}^d (a string like "Lr") to the part f_b.

    Parts are produced by applying the per-axis operators in `axis_order`
    (1-based, default 1..d); the parts sum to f.
    """
    d = f.arity
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != d:
        raise DomainError(f"anchor has {len(alpha)} coordinates, function has arity {d}")
    order = list(range(1, d + 1)) if axis_order is None else [int(a) for a in axis_order]
    if sorted(order) != list(range(1, d + 1)):
        raise DomainError("axis_order must be a permutation of 1..d")
    out = {}
    for pattern in itertools.product("Lr", repeat=d):
        g = f
        for axis in order:
            g = axis_part(g, axis, pattern[axis - 1], alpha[axis - 1])
        out["".join(pattern)] = g
    return out


def step(t: float, closed: bool = True, weight: float = 1.0) -> FV1Function:
    """weight * 1{x >= t} (closed) or weight * 1{x > t}."""
    return FV1Function(None, ((t, weight, 0.0) if closed else (t, 0.0, weight),))
