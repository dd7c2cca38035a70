"""Pseudo-polynomials W(x) = sum_i sum_k A_ik(x without x_i) * x_i**k.

These are exactly the functions every order-n multiple divided difference
annihilates when deg_i = n_i - 1.  Interpolants are built from Lagrange slices:
on axis i with nodes u_1..u_m, the slice interpolant agrees with g on each
hyperplane x_i = u_j.  Evaluation uses the Lagrange product form, which
reproduces g exactly on those hyperplanes; the monomial coefficient evaluators
A_ik are available separately (from barycentric weights) for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .core import Box, MultiIndex
from .divdiff import check_box_affine  # noqa: F401  (part of this module's API)
from .errors import DomainError, PointSystemError
from .exprfn import Combination, Evaluator, FunctionSpec, function_from_json, register_json_kind


def _drop(X: np.ndarray, i: int) -> np.ndarray:
    return np.delete(X, i, axis=1)


def _insert(Y: np.ndarray, i: int, value) -> np.ndarray:
    return np.insert(Y, i, value, axis=1)


@dataclass(frozen=True, eq=False)
class PseudoPolynomial(FunctionSpec):
    """Explicit sum of terms (axis, k, A) with A a function of the other d-1 coordinates.

    `axis` is 1-based.  For d = 1 the coefficients take no arguments (arity 0).
    """

    terms: tuple
    arity: int
    degree: tuple

    def __post_init__(self):
        degree = tuple(int(v) for v in self.degree)
        if len(degree) != self.arity or any(v < -1 for v in degree):
            raise DomainError(f"bad degree vector {degree} for arity {self.arity}")
        for axis, k, A in self.terms:
            if not 1 <= axis <= self.arity:
                raise DomainError(f"term axis {axis} out of range")
            if not 0 <= k <= degree[axis - 1]:
                raise DomainError(f"term x{axis}^{k} exceeds degree {degree[axis - 1]}")
            if A.arity != self.arity - 1:
                raise DomainError("coefficient must be a function of the other d-1 variables")
        object.__setattr__(self, "degree", degree)

    def axis_terms(self, axis: int) -> list:
        return [(k, A) for a, k, A in self.terms if a == axis]

    def _values(self, X):
        out = np.zeros(X.shape[0])
        for axis, k, A in self.terms:
            i = axis - 1
            out = out + A.values(_drop(X, i)) * X[:, i] ** float(k)
        return out


def lagrange_matrix(nodes: Sequence[float]) -> np.ndarray:
    """M[j, k] = coefficient of x**k in the j-th Lagrange basis polynomial."""
    u = np.asarray(nodes, dtype=float)
    m = len(u)
    M = np.zeros((m, m))
    for j in range(m):
        others = np.delete(u, j)
        w = 1.0 / np.prod(u[j] - others)  # barycentric weight
        M[j] = P.polyfromroots(others) * w if m > 1 else np.array([1.0])
    return M


def _lagrange_basis(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """ell_j(x) for all j, shape (N, m); exactly 1/0 when x hits a node."""
    m = len(u)
    L = np.ones((x.shape[0], m))
    for j in range(m):
        num = np.ones(x.shape[0])
        den = 1.0
        for l in range(m):
            if l != j:
                num = num * (x - u[l])
                den = den * (u[j] - u[l])
        L[:, j] = num / den
    return L


class SlicePseudoPolynomial(PseudoPolynomial):
    """Lagrange interpolant of g along one axis: agrees with g whenever x_axis is a node."""

    def __init__(self, g: FunctionSpec, axis: int, nodes: Sequence[float]):
        u = tuple(float(v) for v in nodes)
        if len(set(u)) != len(u):
            raise PointSystemError(f"axis {axis}: duplicate interpolation nodes {u}")
        if not 1 <= axis <= g.arity:
            raise DomainError(f"axis {axis} out of range for arity {g.arity}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "axis", int(axis))
        object.__setattr__(self, "nodes", u)
        object.__setattr__(self, "arity", g.arity)
        degree = [-1] * g.arity
        degree[axis - 1] = len(u) - 1
        object.__setattr__(self, "degree", tuple(degree))
        object.__setattr__(self, "_M", lagrange_matrix(u) if u else np.zeros((0, 0)))

    def _node_points(self, Y):
        i = self.axis - 1
        pts = np.repeat(_insert(Y, i, 0.0), len(self.nodes), axis=0)
        pts[:, i] = np.tile(self.nodes, Y.shape[0])
        return pts

    def node_values(self, Y: np.ndarray) -> np.ndarray:
        """g at (y with x_axis = u_j) for every j: shape (N, m)."""
        return self.g.values(self._node_points(Y)).reshape(Y.shape[0], len(self.nodes))

    @property
    def terms(self):
        out = []
        for k in range(len(self.nodes)):
            col = self._M[:, k]
            out.append((self.axis, k, Evaluator(
                lambda Y, col=col: self.node_values(Y) @ col, self.arity - 1, f"A[{self.axis},{k}]")))
        return tuple(out)

    def _values(self, X):
        if not self.nodes:
            return np.zeros(X.shape[0])
        i = self.axis - 1
        G = self.node_values(_drop(X, i))
        return np.sum(G * _lagrange_basis(np.asarray(self.nodes), X[:, i]), axis=1)

    def _values_mag(self, X):
        if not self.nodes:
            return np.zeros(X.shape[0]), np.zeros(X.shape[0])
        i = self.axis - 1
        N, m = X.shape[0], len(self.nodes)
        G, M = self.g.values_and_magnitude(self._node_points(_drop(X, i)))
        L = _lagrange_basis(np.asarray(self.nodes), X[:, i])
        return np.sum(G.reshape(N, m) * L, axis=1), np.sum(M.reshape(N, m) * np.abs(L), axis=1)

    def to_json(self):
        return {"pseudopoly": {"f": self.g.to_json(), "axis": self.axis, "nodes": list(self.nodes)},
                "arity": self.arity}

    def __repr__(self):
        return f"SlicePseudoPolynomial(axis={self.axis}, nodes={self.nodes})"


class GridPseudoPolynomial(PseudoPolynomial):
    """Sum of slice interpolants W_i of g_i = f - (W_1 + ... + W_{i-1}), i = 1..d.

    Agrees with f on every hyperplane x_i = u_ij.
    """

    def __init__(self, f: FunctionSpec, nodes: Sequence[Sequence[float]]):
        nodes = tuple(tuple(float(v) for v in t) for t in nodes)
        if len(nodes) != f.arity:
            raise DomainError(f"need one node tuple per axis ({f.arity}), got {len(nodes)}")
        blocks = []
        g = f
        for i, u in enumerate(nodes, start=1):
            W_i = SlicePseudoPolynomial(g, i, u)
            blocks.append(W_i)
            if i < len(nodes):
                g = Combination(((1.0, f),) + tuple((-1.0, W) for W in blocks))
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "arity", f.arity)
        object.__setattr__(self, "degree", tuple(len(u) - 1 for u in nodes))

    @property
    def terms(self):
        return tuple(t for W in self.blocks for t in W.terms)

    def _values(self, X):
        out = np.zeros(X.shape[0])
        for W in self.blocks:
            out = out + W.values(X)
        return out

    def _values_mag(self, X):
        out, mag = np.zeros(X.shape[0]), np.zeros(X.shape[0])
        for W in self.blocks:
            v, m = W.values_and_magnitude(X)
            out, mag = out + v, mag + m
        return out, mag

    def to_json(self):
        return {"pseudopoly": {"f": self.f.to_json(), "nodes": [list(u) for u in self.nodes],
                               "degree": list(self.degree)}, "arity": self.arity}

    def __repr__(self):
        return f"GridPseudoPolynomial(nodes={self.nodes})"


@register_json_kind("pseudopoly")
def _read_pseudopoly(doc, arity, path):
    body = doc["pseudopoly"]
    f = function_from_json(body["f"], arity, f"{path}.pseudopoly.f")
    if "axis" in body:
        return SlicePseudoPolynomial(f, int(body["axis"]), body["nodes"])
    W = GridPseudoPolynomial(f, body["nodes"])
    if "degree" in body and tuple(body["degree"]) != W.degree:
        from .errors import SchemaError
        raise SchemaError(f"degree {body['degree']} does not match node counts", f"{path}.pseudopoly.degree")
    return W


def _check_nodes(nodes, box):
    if box is None:
        return
    for i, u in enumerate(nodes):
        for v in u:
            if not box.lower[i] < v < box.upper[i]:
                raise DomainError(f"axis {i + 1}: node {v} outside the box")


def lagrange_slice_interpolant(f: FunctionSpec, i: int, nodes: Sequence[float],
                               box: Box | None = None) -> SlicePseudoPolynomial:
    """Pseudo-polynomial with terms on axis i only, equal to f when x_i is a node."""
    if box is not None:
        for v in nodes:
            if not box.lower[i - 1] < v < box.upper[i - 1]:
                raise DomainError(f"axis {i}: node {v} outside the box")
    return SlicePseudoPolynomial(f, i, nodes)


def grid_interpolant(f: FunctionSpec, nodes: Sequence[Sequence[float]],
                     box: Box | None = None) -> GridPseudoPolynomial:
    """Pseudo-polynomial of degree (len(u_1)-1, ..., len(u_d)-1) equal to f on all node hyperplanes."""
    _check_nodes(nodes, box)
    return GridPseudoPolynomial(f, nodes)


def regularize(f: FunctionSpec, n, nodes: Sequence[Sequence[float]],
               box: Box | None = None) -> Combination:
    """g = f - W, which vanishes on every node hyperplane."""
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    if tuple(len(u) for u in nodes) != n.entries:
        raise DomainError(f"axis i needs n_i nodes; order {n.entries}, "
                          f"got {tuple(len(u) for u in nodes)}")
    return Combination(((1.0, f), (-1.0, grid_interpolant(f, nodes, box))))


def default_nodes(box: Box, n) -> list:
    """n_i equally spaced interior nodes per axis (used when a caller gives none)."""
    out = []
    for i, ni in enumerate(n):
        a, b = box.lower[i], box.upper[i]
        if not (np.isfinite(a) and np.isfinite(b)):
            a, b = max(a, -1.0), min(b, 1.0)
        out.append(tuple(a + (j + 1) * (b - a) / (ni + 1) for j in range(ni)))
    return out
