"""Box-n-convex functions built from a pseudo-polynomial plus nonnegative atom measures.

    f(x) = W(x) + sum_b sum_atoms w * prod_j (x_j - u_j)^(n_j - 1) / (n_j - 1)! * chi^{b_j}_{alpha_j, x_j}(u_j)

with b running over side patterns in {L, r}^d, written as strings such as "rL".
Powers use 0**0 = 1.  With nonnegative weights every such f is box-n-convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import AxisSubset, MultiIndex
from .errors import DomainError, SchemaError
from .exprfn import FunctionSpec, function_from_json, register_json_kind, tpow
from .measures import DiscreteSignedMeasure, measure_from_json, rectangle_mass


def chi(side: str, x: float, y: float, u: float) -> int:
    """Signed half-open indicator.

    L: 1 if x <= u < y, -1 if y <= u < x.   r: 1 if x < u <= y, -1 if y < u <= x.
    """
    return int(chi_array(side, np.float64(x), np.float64(y), np.float64(u)))


def chi_array(side: str, x, y, u) -> np.ndarray:
    x, y, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(u, float))
    if side == "L":
        pos = (x <= u) & (u < y)
        neg = (y <= u) & (u < x)
    elif side == "r":
        pos = (x < u) & (u <= y)
        neg = (y < u) & (u <= x)
    else:
        raise DomainError(f"side must be 'L' or 'r', got {side!r}")
    return pos.astype(float) - neg.astype(float)


@dataclass(frozen=True, eq=False)
class RepresentationSpec:
    n: MultiIndex
    alpha: tuple
    W: FunctionSpec | None = None
    parts: dict = field(default_factory=dict)
    canonical: bool = True

    def __post_init__(self):
        n = self.n if isinstance(self.n, MultiIndex) else MultiIndex(tuple(self.n))
        object.__setattr__(self, "n", n)
        alpha = tuple(float(a) for a in self.alpha)
        d = n.d
        if len(alpha) != d:
            raise DomainError(f"anchor has {len(alpha)} coordinates, order has {d}")
        object.__setattr__(self, "alpha", alpha)
        if any(v < 1 for v in n):
            raise DomainError("representation needs every n_i >= 1")
        if self.W is not None and self.W.arity != d:
            raise DomainError("W has the wrong arity")
        parts = {}
        for b, mu in self.parts.items():
            b = "".join(b)
            if len(b) != d or any(c not in "Lr" for c in b):
                raise DomainError(f"part key {b!r} must be a string over L/r of length {d}")
            if mu.dim != d:
                raise DomainError(f"part {b} has dimension {mu.dim}, need {d}")
            if np.any(mu.weights < 0):
                raise DomainError(f"part {b} has negative weights; representing measures must be nonnegative")
            if self.canonical:
                for i, c in enumerate(b):
                    if c == "L" and n[i] >= 2:
                        raise DomainError(
                            f"part {b}: side L on axis {i + 1} needs n_{i + 1} = 1 in canonical mode")
            parts[b] = mu
        object.__setattr__(self, "parts", parts)

    @property
    def d(self) -> int:
        return self.n.d

    def to_json(self):
        return {"n": list(self.n), "alpha": list(self.alpha),
                "W": None if self.W is None else self.W.to_json(),
                "parts": {b: mu.to_json() for b, mu in sorted(self.parts.items())},
                "mode": "canonical" if self.canonical else "permissive"}


def representation_from_json(doc, path: str = "spec") -> RepresentationSpec:
    try:
        n = MultiIndex(tuple(doc["n"]))
        alpha = tuple(doc["alpha"])
    except (KeyError, TypeError) as exc:
        raise SchemaError("representation needs n and alpha", path) from exc
    W = doc.get("W")
    W = None if W is None else function_from_json(W, n.d, f"{path}.W")
    # atoms in the parts live in R^d; "dim" may be omitted
    parts = {b: measure_from_json(m if not isinstance(m, dict) or "dim" in m else {**m, "dim": n.d}, f"{path}.parts.{b}")
             for b, m in doc.get("parts", {}).items()}
    for b, m in parts.items():
        if not isinstance(m, DiscreteSignedMeasure):
            raise SchemaError("parts must be atom lists", f"{path}.parts.{b}")
    mode = doc.get("mode", "canonical")
    if mode not in ("canonical", "permissive"):
        raise SchemaError("mode must be canonical or permissive", f"{path}.mode")
    return RepresentationSpec(n, alpha, W, parts, mode == "canonical")


def _kernel(x: np.ndarray, u: np.ndarray, k: int, side: str, alpha: float) -> np.ndarray:
    """(x - u)^k / k! * chi^side_{alpha, x}(u) for x (N,) against u (K,): shape (N, K)."""
    X = x[:, None]
    U = u[None, :]
    power = (X - U) ** float(k) / math.factorial(k)
    return power * chi_array(side, alpha, X, U)


@dataclass(frozen=True, eq=False)
class Synthesized(FunctionSpec):
    spec: RepresentationSpec

    @property
    def arity(self) -> int:
        return self.spec.d

    def part_values(self, X: np.ndarray, b: str) -> np.ndarray:
        mu = self.spec.parts[b]
        if mu.is_zero():
            return np.zeros(X.shape[0])
        prod = np.ones((X.shape[0], len(mu)))
        for j in range(self.arity):
            prod = prod * _kernel(X[:, j], mu.locations[:, j], self.spec.n[j] - 1, b[j],
                                  self.spec.alpha[j])
        return prod @ mu.weights

    def _values(self, X):
        out = np.zeros(X.shape[0]) if self.spec.W is None else self.spec.W.values(X)
        for b in sorted(self.spec.parts):
            out = out + self.part_values(X, b)
        return out

    def to_json(self):
        return {"synth": self.spec.to_json()}


@register_json_kind("synth")
def _read_synth(doc, arity, path):
    return Synthesized(representation_from_json(doc["synth"], f"{path}.synth"))


def synthesize(spec: RepresentationSpec) -> Synthesized:
    return Synthesized(spec)


@dataclass(frozen=True, eq=False)
class SplineBasis(FunctionSpec):
    """prod_{j not in A} (x_j-u_j)_+^(n_j-1)/(n_j-1)!  *  prod_{j in A} (-1)^n_j (x_j-u_j)_-^(n_j-1)/(n_j-1)!"""

    A: AxisSubset
    u: tuple
    n: MultiIndex

    @property
    def arity(self) -> int:
        return self.n.d

    def _values(self, X):
        out = np.ones(X.shape[0])
        for j in range(self.arity):
            k = self.n[j] - 1
            if (j + 1) in self.A:
                f = (-1.0) ** self.n[j] * tpow(X[:, j] - self.u[j], k, "minus")
            else:
                f = tpow(X[:, j] - self.u[j], k, "plus")
            out = out * f / math.factorial(k)
        return out

    def to_json(self):
        return {"spline": {"A": list(self.A.members), "u": list(self.u), "n": list(self.n)}}


@register_json_kind("spline")
def _read_spline(doc, arity, path):
    body = doc["spline"]
    n = MultiIndex(tuple(body["n"]))
    return spline_basis(AxisSubset(tuple(body.get("A", ())), n.d), body["u"], n)


def spline_basis(A: AxisSubset, u: Sequence[float], n) -> SplineBasis:
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    if any(v < 1 for v in n):
        raise DomainError("spline basis needs every n_i >= 1")
    u = tuple(float(v) for v in u)
    if len(u) != n.d or A.d != n.d:
        raise DomainError("u, A and n must have the same dimension")
    return SplineBasis(A, u, n)


# ---------------------------------------------------------------------------
# Extraction for n = (1, ..., 1)
# ---------------------------------------------------------------------------

def cell_representative(rect, b: str) -> tuple:
    """The closed corner of the half-open cell: z_j on r-axes, y_j on L-axes."""
    return tuple(z if s == "r" else y for (y, z), s in zip(rect, b))


def atom_in_cell(u, rect, b: str) -> bool:
    for (y, z), s, v in zip(rect, b, u):
        if s == "r" and not (y < v <= z):
            return False
        if s == "L" and not (y <= v < z):
            return False
    return True


def roundtrip_extract(spec: RepresentationSpec, probes: Sequence) -> tuple[list, DiscreteSignedMeasure]:
    """Rectangle masses of synthesize(spec) on the probe rectangles.

    Returns the per-probe masses and a measure that puts each mass at its cell's
    closed corner (so atoms sitting on those corners come back at their own
    locations when the probes partition the support).
    """
    if any(v != 1 for v in spec.n):
        raise DomainError("measure extraction is only available for n = (1, ..., 1)")
    if len(spec.parts) > 1:
        raise DomainError("extraction needs a single side pattern")
    b = next(iter(spec.parts), "r" * spec.d)
    f = synthesize(spec)
    masses = [rectangle_mass(f, rect, tuple(b)) for rect in probes]
    floor = 1e-12 * max(1.0, math.fsum(abs(m) for m in masses))
    atoms = [(cell_representative(rect, b), m) for rect, m in zip(probes, masses) if abs(m) > floor]
    return masses, DiscreteSignedMeasure.from_atoms(atoms, spec.d) if atoms else DiscreteSignedMeasure.zero(spec.d)
