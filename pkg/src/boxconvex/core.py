"""Boxes, order vectors, axis subsets, point systems and slicing.

Axes are numbered from 1 in everything a user sees (JSON, reports, AxisSubset
members).  Arrays inside the package are indexed from 0; `AxisSubset.zero_based`
is the one place the two meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, PointSystemError, SchemaError
from .exprfn import FunctionSpec, function_from_json, register_json_kind


@dataclass(frozen=True)
class MultiIndex:
    """Order vector n = (n_1, ..., n_d)."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        if len(entries) < 1:
            raise DomainError("a multi-index needs at least one entry")
        if any(v < 0 for v in entries):
            raise DomainError(f"multi-index entries must be nonnegative: {entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __len__(self):
        return len(self.entries)

    def to_json(self):
        return list(self.entries)


@dataclass(frozen=True)
class Box:
    """Product of open intervals; infinite endpoints allowed."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise DomainError("box needs matching, nonempty lower/upper bounds")
        for i, (a, b) in enumerate(zip(lo, hi)):
            if math.isnan(a) or math.isnan(b) or not a < b:
                raise DomainError(f"axis {i + 1}: need lower < upper, got ({a}, {b})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence[float]]) -> "Box":
        intervals = list(intervals)
        return cls(tuple(a for a, _ in intervals), tuple(b for _, b in intervals))

    @classmethod
    def cube(cls, a: float, b: float, d: int) -> "Box":
        return cls((a,) * d, (b,) * d)

    @property
    def d(self) -> int:
        return len(self.lower)

    def width(self, i: int) -> float:
        return self.upper[i] - self.lower[i]

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.lower + self.upper)

    def contains(self, x: Sequence[float], axes: Sequence[int] | None = None) -> bool:
        axes = range(self.d) if axes is None else axes
        return all(self.lower[i] < v < self.upper[i] for i, v in zip(axes, x))

    def to_json(self):
        return {"axes": [{"lo": a, "hi": b} for a, b in zip(self.lower, self.upper)]}


def box_from_json(doc, path="box") -> Box:
    try:
        axes = doc["axes"]
        return Box(tuple(float(a["lo"]) for a in axes), tuple(float(a["hi"]) for a in axes))
    except (KeyError, TypeError) as exc:
        raise SchemaError("box must be {\"axes\": [{\"lo\":..,\"hi\":..}, ...]}", path) from exc


@dataclass(frozen=True)
class AxisSubset:
    """A subset A of the axes {1, ..., d}, stored sorted with 1-based labels."""

    members: tuple
    d: int

    def __post_init__(self):
        members = tuple(sorted({int(m) for m in self.members}))
        if self.d < 1:
            raise DomainError("dimension must be at least 1")
        if any(not 1 <= m <= self.d for m in members):
            raise DomainError(f"axis subset {members} not inside 1..{self.d}")
        object.__setattr__(self, "members", members)

    @property
    def zero_based(self) -> tuple:
        return tuple(m - 1 for m in self.members)

    def __contains__(self, axis: int) -> bool:
        return axis in self.members

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def complement(A: AxisSubset) -> AxisSubset:
    return AxisSubset(tuple(i for i in range(1, A.d + 1) if i not in A.members), A.d)


def all_subsets(d: int) -> list:
    """Every subset of {1..d}, ordered by size then lexicographically."""
    from itertools import combinations

    return [AxisSubset(c, d) for r in range(d + 1) for c in combinations(range(1, d + 1), r)]


@dataclass(frozen=True, eq=False)
class Sliced(FunctionSpec):
    """f restricted to the axes in `A`, with the remaining coordinates frozen at `z`."""

    f: FunctionSpec
    A: AxisSubset
    z: tuple

    @property
    def arity(self) -> int:
        return len(self.A)

    def _assemble(self, Y):
        X = np.empty((Y.shape[0], self.f.arity))
        free = list(self.A.zero_based)
        fixed = list(complement(self.A).zero_based)
        X[:, free] = Y
        if fixed:
            X[:, fixed] = np.asarray(self.z, dtype=float)
        return X

    def _values(self, Y):
        return self.f.values(self._assemble(Y))

    def _values_mag(self, Y):
        return self.f.values_and_magnitude(self._assemble(Y))

    def to_json(self):
        return {"slice": {"f": self.f.to_json(), "axes": list(self.A.members), "z": list(self.z)},
                "arity": self.arity}


@register_json_kind("slice")
def _read_slice(doc, arity, path):
    body = doc["slice"]
    f = function_from_json(body["f"], None, f"{path}.slice.f")
    return slice_function(f, AxisSubset(tuple(body["axes"]), f.arity), body["z"])


def slice_function(f: FunctionSpec, A: AxisSubset, z: Sequence[float],
                   box: Box | None = None) -> FunctionSpec:
    """The function y -> f(x) with x_A = y and x_{A'} = z."""
    if A.d != f.arity:
        raise DomainError(f"subset is for dimension {A.d}, function has arity {f.arity}")
    z = tuple(float(v) for v in z)
    rest = complement(A)
    if len(z) != len(rest):
        raise DomainError(f"need {len(rest)} fixed coordinates, got {len(z)}")
    if box is not None and not box.contains(z, rest.zero_based):
        raise DomainError(f"fixed coordinates {z} lie outside the box")
    if not rest.members:
        return f
    if isinstance(f, Sliced):
        # fold nested slices into one so repeated slicing stays flat
        outer_free = f.A.members
        merged_z = dict(zip(complement(f.A).members, f.z))
        merged_z.update({outer_free[j - 1]: v for j, v in zip(rest.members, z)})
        members = tuple(outer_free[j - 1] for j in A.members)
        inner = AxisSubset(members, f.f.arity)
        return Sliced(f.f, inner, tuple(merged_z[k] for k in sorted(merged_z)))
    return Sliced(f, A, z)


@dataclass(frozen=True)
class PointSystem:
    """Per-axis node tuples x_i = (x_i0, ..., x_in_i)."""

    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(tuple(float(v) for v in t) for t in self.nodes))

    @property
    def d(self) -> int:
        return len(self.nodes)

    @property
    def order(self) -> MultiIndex:
        return MultiIndex(tuple(len(t) - 1 for t in self.nodes))

    def to_json(self):
        return [list(t) for t in self.nodes]


def validate_point_system(s: PointSystem, box: Box | None, n: MultiIndex | Sequence[int]) -> None:
    """Raise PointSystemError unless axis i carries n_i + 1 distinct nodes inside the box."""
    n = tuple(n)
    if len(s.nodes) != len(n):
        raise PointSystemError(f"point system has {len(s.nodes)} axes, order has {len(n)}")
    if box is not None and box.d != len(n):
        raise PointSystemError(f"box has {box.d} axes, order has {len(n)}")
    for i, (t, ni) in enumerate(zip(s.nodes, n)):
        if len(t) != ni + 1:
            raise PointSystemError(f"axis {i + 1}: wrong length, expected {ni + 1} nodes, got {len(t)}")
        for j in range(len(t)):
            if not math.isfinite(t[j]):
                raise PointSystemError(f"axis {i + 1}: node {t[j]} is not finite")
            for k in range(j + 1, len(t)):
                if t[j] == t[k]:
                    raise PointSystemError(
                        f"axis {i + 1}: duplicate node {t[j]} at positions {j} and {k}")
            if box is not None and not box.lower[i] < t[j] < box.upper[i]:
                raise PointSystemError(
                    f"axis {i + 1}: node {t[j]} outside ({box.lower[i]}, {box.upper[i]})")
