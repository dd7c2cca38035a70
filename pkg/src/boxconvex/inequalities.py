"""Hermite-Hadamard, Jensen and Rasa type inequalities, and strong box-convexity.

All three inequalities are alternating sums over subsets A of the axes:

    gap = sum_A (-1)^|A| E f(Z_A),   Z_A,i ~ X_i if i in A else Y_i,

with independent coordinates, so each expectation is a tensor-product rule:
exact atom sums for discrete marginals, Gauss-Legendre for uniform ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import Box, MultiIndex, all_subsets
from .divdiff import ConvexityCertificate, certify_box_convexity
from .errors import DomainError, PreconditionError
from .exprfn import Builtin, Combination, FunctionSpec
from .measures import (DiscreteSignedMeasure, UniformSegment, convolve_power,
                       truncated_power_moment)
from .orders import OrderVerdict, check_box_order_product

Marginal = Union[DiscreteSignedMeasure, UniformSegment, float]


def _rule(m: Marginal, resolution: int | None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(m, UniformSegment):
        if resolution is not None:
            m = m.with_resolution(resolution)
        return m.quadrature()
    if isinstance(m, DiscreteSignedMeasure):
        if m.dim != 1:
            raise DomainError("marginals must be 1-dimensional")
        if not m.is_probability():
            raise PreconditionError("marginals must be probability measures")
        return m.support, m.weights
    return np.array([float(m)]), np.array([1.0])


def tensor_expectation(f: FunctionSpec, marginals: Sequence[Marginal], resolution: int | None = None) -> float:
    """E f(Z) for independent Z_i with the given marginals."""
    rules = [_rule(m, resolution) for m in marginals]
    if f.arity != len(rules):
        raise DomainError(f"function has arity {f.arity}, got {len(rules)} marginals")
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    w = rules[0][1]
    for r in rules[1:]:
        w = np.multiply.outer(w, r[1])
    return float(np.dot(np.ravel(w), f.values(pts)))


@dataclass
class GapReport:
    value: float
    contributions: dict  # tuple of 1-based axes -> E f(Z_A), in rank order
    resolution: int | None = None
    statement: str = ""

    def to_json(self):
        return {"value": self.value,
                "terms": [{"A": list(A), "sign": -1 if len(A) % 2 else 1, "expectation": v}
                          for A, v in self.contributions.items()],
                "resolution": self.resolution}


def alternating_gap(f: FunctionSpec, X: Sequence[Marginal], Y: Sequence[Marginal],
                    resolution: int | None = 8) -> GapReport:
    d = f.arity
    if len(X) != d or len(Y) != d:
        raise DomainError(f"need {d} X- and Y-marginals")
    if resolution is not None and resolution < 2:
        raise DomainError("quadrature resolution must be at least 2")
    contributions = {}
    value = 0.0
    for A in all_subsets(d):
        Z = [X[i] if (i + 1) in A else Y[i] for i in range(d)]
        e = tensor_expectation(f, Z, resolution)
        contributions[A.members] = e
        value += -e if len(A) % 2 else e
    uses_quadrature = any(isinstance(m, UniformSegment) for m in list(X) + list(Y))
    return GapReport(value, contributions, resolution if uses_quadrature else None)


def hh_check(f: FunctionSpec, a: Sequence[float], b: Sequence[float], which: str = "first",
             resolution: int = 8) -> GapReport:
    """Hermite-Hadamard gap on the box prod [a_i, b_i].

    first:  X_i = midpoint, Y_i = uniform[a_i, b_i]
    second: X_i = uniform,  Y_i = (delta_{a_i} + delta_{b_i}) / 2
    """
    d = f.arity
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if len(a) != d or len(b) != d:
        raise DomainError(f"need {d} lower and upper corners")
    U = [UniformSegment(lo, hi, resolution) for lo, hi in zip(a, b)]
    if which == "first":
        X = [0.5 * (lo + hi) for lo, hi in zip(a, b)]
        Y = U
    elif which == "second":
        X = U
        Y = [DiscreteSignedMeasure.from_atoms([(lo, 0.5), (hi, 0.5)]) for lo, hi in zip(a, b)]
    else:
        raise DomainError("which must be 'first' or 'second'")
    rep = alternating_gap(f, X, Y, resolution)
    rep.statement = f"{which} Hermite-Hadamard inequality for box-(2,...,2)-convex functions"
    return rep


def jensen_gap(f: FunctionSpec, marginals: Sequence[DiscreteSignedMeasure]) -> GapReport:
    """Jensen gap: X_i = point mass at the mean of marginal i, Y_i = marginal i."""
    for i, m in enumerate(marginals, start=1):
        if m.dim != 1 or np.any(m.weights < 0) or abs(m.mass() - 1.0) > 1e-12:
            raise PreconditionError(f"marginal {i}: weights must be a probability vector")
    X = [float(np.dot(m.weights, m.support)) for m in marginals]
    rep = alternating_gap(f, X, list(marginals), None)
    rep.statement = "Jensen inequality for box-(2,...,2)-convex functions"
    return rep


def default_A_grid(gamma: DiscreteSignedMeasure) -> np.ndarray:
    xs = gamma.support
    if xs.size == 0:
        return np.zeros(1)
    mids = 0.5 * (xs[:-1] + xs[1:])
    return np.unique(np.concatenate([xs, mids, [xs[0] - 1.0, xs[-1] + 1.0]]))


def rasa_factor(gamma: DiscreteSignedMeasure, q: int, A: float) -> float:
    """Integral of (x - A)_+^(q-1)/(q-1)! against gamma (the survival-convolution bridge)."""
    return truncated_power_moment(gamma, A, q - 1, "plus") / math.factorial(q - 1)


def rasa_check(mus: Sequence[DiscreteSignedMeasure], nus: Sequence[DiscreteSignedMeasure], n,
               A_grid: Sequence | None = None) -> OrderVerdict:
    """Does (nu_1-mu_1)^{*n_1} x ... x (nu_d-mu_d)^{*n_d} integrate every box-n-convex f to >= 0?"""
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    d = n.d
    if len(mus) != d or len(nus) != d:
        raise DomainError(f"need {d} pairs of marginals")
    if any(v < 2 for v in n):
        raise DomainError("every n_i must be at least 2")
    gammas, lemma = [], []
    for i, (mu, nu) in enumerate(zip(mus, nus), start=1):
        for name, m in (("mu", mu), ("nu", nu)):
            if m.dim != 1 or m.is_zero():
                raise PreconditionError(f"{name}_{i} must be a nonempty 1-d measure")
            if not m.is_probability():
                raise PreconditionError(f"{name}_{i} must be a probability measure")
        tau = nu - mu
        g = convolve_power(tau, n[i - 1]) if not tau.is_zero() else tau
        gammas.append(g)
        lemma.append({"axis": i, "moments": [g.moment(k) for k in range(n[i - 1])]})
    factor_values = []
    for i, g in enumerate(gammas):
        grid = default_A_grid(g) if A_grid is None else np.asarray(A_grid[i], dtype=float)
        factor_values.append([[float(A), rasa_factor(g, n[i], float(A))] for A in grid])
    detail = {"vanishing_moments": lemma, "factor_values": factor_values}
    zero_axes = [i + 1 for i, g in enumerate(gammas) if g.is_zero()]
    if zero_axes:
        detail.update({"zero_factors": zero_axes, "classes": None})
        return OrderVerdict(True, "none", detail)
    verdict = check_box_order_product(gammas, n)
    verdict.detail.update(detail)
    return verdict


def strongly_convex_check(f: FunctionSpec, C: float, n, box: Box, trials: int = 500,
                          tol: float = 1e-9, seed: int = 0, sampler: str = "random") -> ConvexityCertificate:
    """Certify g = f - C * prod x_i^n_i as box-n-convex."""
    if C < 0:
        raise DomainError("modulus C must be nonnegative")
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    g = f if C == 0 else Combination(((1.0, f), (-float(C), Builtin("power_product", tuple(n), n.d))))
    return certify_box_convexity(g, n, box, sampler, trials, tol, seed)
