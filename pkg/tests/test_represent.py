import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxconvex import (AxisSubset, Box, DiscreteSignedMeasure, DomainError, RepresentationSpec,
                       certify_box_convexity, chi, function_from_json, roundtrip_extract,
                       spline_basis, synthesize)
from boxconvex.catalog import random_spec
from boxconvex.measures import grid_rectangles
from boxconvex.represent import chi_array, representation_from_json

atoms = DiscreteSignedMeasure.from_atoms


def test_chi_examples():
    assert chi("L", 0, 1, 0) == 1
    assert chi("r", 0, 1, 0) == 0
    assert chi("r", 1, 0, 0.5) == -1
    assert chi("L", 1, 0, 1) == 0 and chi("L", 1, 0, 0) == -1
    assert chi("r", 0, 1, 1) == 1 and chi("r", 0.3, 0.3, 0.3) == 0


@given(st.sampled_from("Lr"), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_chi_antisymmetric_and_vectorised(side, x, y, u):
    assert chi(side, x, y, u) == -chi(side, y, x, u)
    assert chi_array(side, np.array([x]), np.array([y]), np.array([u]))[0] == chi(side, x, y, u)


def test_synthesize_examples():
    f = synthesize(RepresentationSpec((2,), (0.0,), None, {"r": atoms([(0.5, 1.0)])}))
    assert f(1.0) == 0.5 and f(0.25) == 0.0 and f(2.0) == 1.5
    W = function_from_json({"expr": "x1*x2 - 3"}, 2)
    g = synthesize(RepresentationSpec((2, 1), (0.0, 0.0), W, {}))
    P = np.random.default_rng(0).normal(size=(20, 2))
    assert np.array_equal(g.values(P), W.values(P))
    h = synthesize(RepresentationSpec((2, 2), (-1.0, -1.0), None, {"rr": atoms([((0.0, 0.0), 1.0)], 2)}))
    assert h(1.0, 2.0) == 2.0


def test_spec_validation():
    with pytest.raises(DomainError, match="negative"):
        RepresentationSpec((1,), (0.0,), None, {"r": atoms([(0.5, -1.0)])})
    with pytest.raises(DomainError, match="canonical"):
        RepresentationSpec((2,), (0.0,), None, {"L": atoms([(0.5, 1.0)])})
    RepresentationSpec((2,), (0.0,), None, {"L": atoms([(0.5, 1.0)])}, canonical=False)
    with pytest.raises(DomainError):
        RepresentationSpec((0,), (0.0,))


def test_spline_basis_examples():
    f = spline_basis(AxisSubset((), 2), (0.0, 0.0), (2, 2))
    assert f(1.0, 1.0) == 1.0
    g = spline_basis(AxisSubset((1,), 2), (0.0, 0.0), (2, 2))
    assert g(-2.0, 1.0) == 2.0
    h = spline_basis(AxisSubset((2,), 2), (0.3, 0.4), (3, 2))
    assert h(0.9, 0.4) == 0.0 and h(0.3, -1.0) == 0.0


def test_spline_basis_matches_formula():
    rng = np.random.default_rng(1)
    n = (3, 1, 2)
    u = (0.1, -0.2, 0.3)
    X = rng.uniform(-1, 1, size=(40, 3))
    for A in [(), (1,), (2, 3), (1, 2, 3)]:
        f = spline_basis(AxisSubset(A, 3), u, n)
        expect = np.ones(40)
        for j in range(3):
            e = X[:, j] - u[j]
            k = n[j] - 1
            if j + 1 in A:
                expect *= (-1) ** n[j] * np.where(e < 0, -e, 0.0) ** k * (e < 0 if k == 0 else 1)
            else:
                expect *= np.where(e > 0, e, 0.0) ** k * (e >= 0 if k == 0 else 1)
            expect /= math.factorial(k)
        assert np.allclose(f.values(X), expect, rtol=1e-14, atol=0)


def test_anchor_vanishing():
    rng = np.random.default_rng(2)
    for _ in range(30):
        spec = random_spec(rng, max_d=3, max_n=3)
        f = synthesize(spec)
        P = rng.uniform(-0.5, 1.5, size=(50, spec.d))
        j = int(rng.integers(spec.d))
        P[:, j] = spec.alpha[j]
        W = np.zeros(50) if spec.W is None else spec.W.values(P)
        assert np.max(np.abs(f.values(P) - W)) <= 1e-12


def test_restriction_to_upper_orthant_is_a_plain_spline_sum():
    rng = np.random.default_rng(3)
    for _ in range(30):
        spec = random_spec(rng, max_d=3, max_n=3)
        alpha = np.array(spec.alpha)
        P = alpha + rng.uniform(0.0, 1.5, size=(60, spec.d))
        f = synthesize(spec)
        expect = np.zeros(60) if spec.W is None else spec.W.values(P)
        for b, mu in spec.parts.items():
            for u, w in zip(mu.locations, mu.weights):
                term = np.full(60, w)
                for j, side in enumerate(b):
                    k = spec.n[j] - 1
                    if side == "r":
                        inside = u[j] > alpha[j]
                        e = P[:, j] - u[j]
                        kern = np.where(e > 0, e, 0.0) ** k if k else (e >= 0).astype(float)
                    else:
                        inside = u[j] >= alpha[j]
                        kern = (P[:, j] > u[j]).astype(float)
                    term *= kern / math.factorial(k) * inside
                expect += term
        assert np.max(np.abs(f.values(P) - expect)) <= 1e-10


def test_spline_basis_certified_for_every_subset():
    rng = np.random.default_rng(4)
    n = (2, 3)
    for A in [(), (1,), (2,), (1, 2)]:
        f = spline_basis(AxisSubset(A, 2), tuple(rng.uniform(-0.5, 0.5, size=2)), n)
        assert certify_box_convexity(f, n, Box.cube(-1, 1, 2), trials=200).certified


def test_roundtrip_examples():
    spec = RepresentationSpec((1, 1), (0.0, 0.0), None, {"rr": atoms([((0.5, 0.5), 1.0)], 2)})
    edges = [np.arange(0, 1.01, 0.25)] * 2
    masses, mu = roundtrip_extract(spec, grid_rectangles(edges))
    assert sum(abs(m) > 1e-12 for m in masses) == 1
    assert mu.locations.tolist() == [[0.5, 0.5]] and mu.weights[0] == pytest.approx(1.0)
    masses, mu = roundtrip_extract(RepresentationSpec((1, 1), (0.0, 0.0)), grid_rectangles(edges))
    assert all(m == 0 for m in masses) and mu.is_zero()
    two = atoms([((0.25, 0.75), 0.3), ((0.75, 0.5), 0.9)], 2)
    _, mu = roundtrip_extract(RepresentationSpec((1, 1), (0.0, 0.0), None, {"rr": two}), grid_rectangles(edges))
    assert np.allclose(mu.locations, two.locations) and np.allclose(mu.weights, two.weights, atol=1e-12)


def test_roundtrip_needs_unit_order():
    spec = RepresentationSpec((2, 1), (0.0, 0.0))
    with pytest.raises(DomainError):
        roundtrip_extract(spec, [])


def test_spec_json_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(10):
        spec = random_spec(rng)
        again = representation_from_json(spec.to_json())
        P = rng.uniform(-0.5, 1.5, size=(30, spec.d))
        assert np.array_equal(synthesize(spec).values(P), synthesize(again).values(P))
