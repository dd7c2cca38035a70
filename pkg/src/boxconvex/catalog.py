"""Seeded generators for test inputs: random representation specs, convex catalogs,
pseudo-polynomials and measure pairs in a known order.

Everything produced here is box-n-convex (or box-n-affine) by construction,
which is what makes it usable as ground truth.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import MultiIndex
from .exprfn import Combination, Expression
from .measures import DiscreteSignedMeasure
from .represent import RepresentationSpec, synthesize


def allowed_patterns(n: MultiIndex, canonical: bool = True) -> list:
    out = []
    for b in itertools.product("Lr", repeat=n.d):
        if canonical and any(c == "L" and ni >= 2 for c, ni in zip(b, n)):
            continue
        out.append("".join(b))
    return out


def random_pseudopoly(rng: np.random.Generator, n, scale: float = 1.0) -> Expression:
    """Random pseudo-polynomial of degree (n_1-1, ..., n_d-1) as an expression.

    Each term is c * x_i^k * g(x_j) with g a non-polynomial function of another axis.
    """
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    d = n.d
    terms = []
    for i in range(1, d + 1):
        for k in range(n[i - 1]):
            c = round(float(rng.uniform(-1, 1)) * scale, 3)
            t = f"{c}*x{i}^{k}"
            if d > 1:
                j = int(rng.choice([a for a in range(1, d + 1) if a != i]))
                t += rng.choice([f"*exp({round(float(rng.uniform(-1, 1)), 2)}*x{j})",
                                 f"*abs(x{j}-{round(float(rng.uniform(0, 1)), 2)})",
                                 f"*x{j}^{int(rng.integers(0, 4))}"])
            terms.append(t)
    text = " + ".join(terms) if terms else "0"
    return Expression.parse(text, d)


def random_spec(rng: np.random.Generator, d: int | None = None, n=None, max_d: int = 3,
                max_n: int = 3, max_atoms: int = 5, lo: float = 0.0, hi: float = 1.0,
                with_W: bool = True, canonical: bool = True, grid: float | None = None,
                patterns: list | None = None) -> RepresentationSpec:
    """A random RepresentationSpec whose atoms lie in [lo, hi]^d.

    `grid` snaps atom coordinates to multiples of grid (keeps atoms separated).
    """
    if n is None:
        d = int(rng.integers(1, max_d + 1)) if d is None else d
        n = MultiIndex(tuple(int(v) for v in rng.integers(1, max_n + 1, size=d)))
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    d = n.d
    alpha = tuple(float(v) for v in rng.uniform(lo, hi, size=d))
    pats = patterns or allowed_patterns(n, canonical)
    chosen = rng.choice(len(pats), size=int(rng.integers(1, min(3, len(pats)) + 1)), replace=False)
    parts = {}
    for c in chosen:
        k = int(rng.integers(1, max_atoms + 1))
        loc = rng.uniform(lo, hi, size=(k, d))
        if grid is not None:
            loc = np.round(loc / grid) * grid
        w = rng.uniform(0.1, 1.0, size=k)
        parts[pats[c]] = DiscreteSignedMeasure(loc, w, d)
    W = random_pseudopoly(rng, n) if with_W else None
    return RepresentationSpec(n, alpha, W, parts, canonical)


def convex_catalog(n, size: int = 20, seed: int = 0, lo: float = 0.0, hi: float = 1.0) -> list:
    """`size` synthesized box-n-convex functions of order n.

    Half carry a random pseudo-polynomial part; the last entries are positive
    combinations of earlier ones (the cone is closed under those).
    """
    n = n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))
    rng = np.random.default_rng(seed)
    out = []
    base = max(1, size - size // 4)
    for j in range(base):
        spec = random_spec(rng, n=n, lo=lo, hi=hi, with_W=bool(j % 2))
        out.append(synthesize(spec))
    while len(out) < size:
        a, b = rng.choice(base, size=2, replace=False)
        out.append(Combination(((float(rng.uniform(0.2, 2)), out[a]), (float(rng.uniform(0.2, 2)), out[b]))))
    return out


def spread(a: float, h: float) -> DiscreteSignedMeasure:
    """0.5 d_{a-h} + 0.5 d_{a+h} - d_a: zero mass and mean, nonneg against convex functions."""
    return DiscreteSignedMeasure.from_atoms([(a - h, 0.5), (a + h, 0.5), (a, -1.0)])


def box_spread_pair(rng: np.random.Generator, d: int, bumps: int = 2, grid: float = 0.25):
    """(PX, PY) with PY - PX a positive sum of tensor products of spreads: PX <= PY in the box-(2..2) order.

    PX carries enough mass at every negative atom so PY stays a probability measure.
    """
    gamma = DiscreteSignedMeasure.zero(d)
    for _ in range(bumps):
        centre = np.round(rng.uniform(0, 1, size=d) / grid) * grid
        g = None
        for j in range(d):
            s = spread(float(centre[j]), grid)
            g = s if g is None else g.tensor(s)
        gamma = gamma + g.scale(float(rng.uniform(0.2, 1.0)))
    neg = gamma.locations[gamma.weights < 0]
    need = -gamma.weights[gamma.weights < 0]
    extra = rng.uniform(0, 1, size=(2, d))
    PX = DiscreteSignedMeasure(np.vstack([neg, extra]), np.concatenate([need + 0.05, [0.3, 0.3]]), d)
    PX = PX.scale(1.0 / PX.mass())
    PY = PX + gamma.scale(1.0 / (need.sum() + 0.05 * need.size + 0.6))
    return PX, PY
