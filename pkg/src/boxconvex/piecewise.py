"""Exact sign analysis of truncated-power profiles u -> sum_j w_j (x_j - u)_+^p / p!.

Between consecutive atoms the profile is a genuine polynomial of degree <= p,
so its extrema on a bounded piece are at the piece ends or at roots of the
derivative.  Roots are isolated recursively (roots of p' split the interval
into monotone runs, each bisected).  Outside the atom hull the profile is
either identically zero or a single polynomial in u; that polynomial is built
from moments about the hull end, with moments that cancel to roundoff set to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .exprfn import tpow
from .measures import DiscreteSignedMeasure

ROOT_TOL = 1e-12
MOMENT_TOL = 1e-9


def _trim(coef: np.ndarray) -> np.ndarray:
    coef = np.asarray(coef, dtype=float)
    nz = np.flatnonzero(coef)
    return coef[: nz[-1] + 1] if nz.size else coef[:1] * 0.0


def _bisect(coef, lo, hi):
    flo = P.polyval(lo, coef)
    for _ in range(200):
        if hi - lo <= ROOT_TOL * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        fm = P.polyval(mid, coef)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_roots(coef, lo: float, hi: float) -> list:
    """Real roots in [lo, hi] of the polynomial with ascending coefficients `coef`."""
    coef = _trim(coef)
    deg = len(coef) - 1
    if deg < 1:
        return []
    if deg == 1:
        r = -coef[0] / coef[1]
        return [r] if lo <= r <= hi else []
    crit = real_roots(P.polyder(coef), lo, hi)
    marks = [lo] + [c for c in crit if lo < c < hi] + [hi]
    roots = []
    for a, b in zip(marks[:-1], marks[1:]):
        fa, fb = P.polyval(a, coef), P.polyval(b, coef)
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(coef, a, b))
    if P.polyval(hi, coef) == 0.0:
        roots.append(hi)
    out = []
    for r in sorted(roots):
        if not out or r - out[-1] > ROOT_TOL * max(1.0, abs(r)):
            out.append(r)
    return out


@dataclass
class Extremes:
    """Global min / max of a profile over the real line, with witnesses.

    If a side is unbounded the value is the profile at a witness point that
    already has the limiting sign, and the matching `*_unbounded` flag is set.
    """

    min_value: float
    min_at: float
    max_value: float
    max_at: float
    min_unbounded: bool = False
    max_unbounded: bool = False


class TruncatedProfile:
    """h(u) = sum_j w_j * tpow(x_j - u, p, side) / p! for a 1-d signed measure."""

    def __init__(self, gamma: DiscreteSignedMeasure, p: int, side: str = "plus"):
        if gamma.dim != 1:
            raise ValueError("profiles are defined for 1-d measures")
        if p < 0:
            raise ValueError("p must be nonnegative")
        self.x = gamma.support.copy()
        self.w = gamma.weights.copy()
        self.p = int(p)
        self.side = side
        self._fact = float(math.factorial(self.p))

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.x.size == 0:
            return np.zeros(u.shape)
        T = tpow(self.x[None, :] - u[:, None], self.p, self.side)
        return (T @ self.w) / self._fact

    def magnitude(self, u) -> np.ndarray:
        """Same sum with |w_j|: the scale against which cancellation is judged."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.x.size == 0:
            return np.zeros(u.shape)
        T = tpow(self.x[None, :] - u[:, None], self.p, self.side)
        return (T @ np.abs(self.w)) / self._fact

    # polynomial pieces -----------------------------------------------------
    def _local(self, anchor: float, active: np.ndarray, direction: float) -> np.ndarray:
        """Coefficients in t of sum_active w (direction*(x - anchor) + t)^p / p!.

        For the plus side with u = anchor - t this is the profile (direction = 1);
        the minus side is handled with direction = -1 and u = anchor + t.
        """
        p = self.p
        y = direction * (self.x[active] - anchor)
        w = self.w[active]
        coef = np.zeros(p + 1)
        for k in range(p + 1):
            m = y ** (p - k)
            s = math.fsum(w * m)
            if abs(s) <= MOMENT_TOL * math.fsum(np.abs(w) * np.abs(m)):
                s = 0.0
            coef[k] = math.comb(p, k) * s / self._fact
        return coef

    def _critical_points(self) -> list:
        """Interior critical points of each bounded piece."""
        xs = self.x
        out = []
        for a, b in zip(xs[:-1], xs[1:]):
            if self.side == "plus":
                # u in (a, b): active atoms x >= b; u = b - t, t in (0, b - a)
                coef = self._local(b, xs >= b, 1.0)
                ts = real_roots(P.polyder(coef), 0.0, b - a) if len(coef) > 1 else []
                out.extend(b - t for t in ts if 0.0 < t < b - a)
            else:
                # u in (a, b): active atoms x <= a; u = a + t
                coef = self._local(a, xs <= a, -1.0)
                ts = real_roots(P.polyder(coef), 0.0, b - a) if len(coef) > 1 else []
                out.extend(a + t for t in ts if 0.0 < t < b - a)
        return out

    def ray(self):
        """(anchor, direction, coefficients) of the single nonzero ray outside the hull.

        Plus side: u = x_min - t.  Minus side: u = x_max + t.  t >= 0.
        """
        if self.side == "plus":
            a = self.x[0]
            return a, -1.0, self._local(a, np.ones_like(self.x, dtype=bool), 1.0)
        a = self.x[-1]
        return a, 1.0, self._local(a, np.ones_like(self.x, dtype=bool), -1.0)

    def extremes(self) -> Extremes:
        if self.x.size == 0:
            return Extremes(0.0, 0.0, 0.0, 0.0)
        xs = self.x
        cand = list(xs) + list(0.5 * (xs[:-1] + xs[1:])) + self._critical_points()
        # the zero ray: just past the far end of the hull
        cand.append(xs[-1] + 1.0 if self.side == "plus" else xs[0] - 1.0)
        anchor, direction, coef = self.ray()
        coef = _trim(coef)
        deg = len(coef) - 1
        min_unb = max_unb = False
        ray_pts = []
        if deg >= 1:
            bound = 1.0 + float(np.max(np.abs(coef[:-1] / coef[-1])))
            ts = real_roots(P.polyder(coef), 0.0, bound)
            ray_pts = [anchor + direction * t for t in ts if t > 0]
            far = anchor + direction * (bound + 1.0)
            ray_pts.append(far)
            if coef[-1] > 0:
                max_unb = True
            else:
                min_unb = True
        else:
            ray_pts.append(anchor + direction * 1.0)
        cand.extend(ray_pts)
        u = np.asarray(cand)
        v = self(u)
        if deg >= 1:
            # on the ray use the cleaned polynomial: raw sums there are pure roundoff
            t = np.abs(u - anchor)
            on_ray = (u - anchor) * direction > 0
            v = np.where(on_ray, P.polyval(t, coef), v)
        elif coef[0] == 0.0:
            on_ray = (u - anchor) * direction > 0
            v = np.where(on_ray, 0.0, v)
        i, j = int(np.argmin(v)), int(np.argmax(v))
        return Extremes(float(v[i]), float(u[i]), float(v[j]), float(u[j]), min_unb, max_unb)


@dataclass
class SignClass:
    """Global sign of a profile: 'nonneg', 'nonpos' or 'mixed'.

    An identically vanishing profile is reported as 'nonneg' with `zero` set.
    """

    sign: str
    neg_witness: float | None = None
    pos_witness: float | None = None
    neg_value: float | None = None
    pos_value: float | None = None
    zero: bool = False

    def to_json(self):
        return {"sign": self.sign, "zero": self.zero,
                "neg_witness": self.neg_witness, "neg_value": self.neg_value,
                "pos_witness": self.pos_witness, "pos_value": self.pos_value}


def classify_profile(h: TruncatedProfile, tol: float = 1e-9,
                     scale: TruncatedProfile | None = None) -> SignClass:
    """Sign class of h; values within tol * scale(u) of zero count as zero.

    `scale` defaults to h with absolute weights.  Pass it explicitly when h's
    weights are themselves sums that already cancelled.
    """
    ex = h.extremes()
    mag = h.magnitude if scale is None else scale
    neg = ex.min_unbounded or ex.min_value < -tol * float(mag(ex.min_at)[0])
    pos = ex.max_unbounded or ex.max_value > tol * float(mag(ex.max_at)[0])
    # a value that is only roundoff of a vanishing sum never counts as a sign
    if not ex.min_unbounded and ex.min_value >= -1e-300:
        neg = False
    if not ex.max_unbounded and ex.max_value <= 1e-300:
        pos = False
    kw = dict(neg_witness=ex.min_at if neg else None, neg_value=ex.min_value if neg else None,
              pos_witness=ex.max_at if pos else None, pos_value=ex.max_value if pos else None)
    if neg and pos:
        return SignClass("mixed", **kw)
    if neg:
        return SignClass("nonpos", **kw)
    return SignClass("nonneg", zero=not pos, **kw)
