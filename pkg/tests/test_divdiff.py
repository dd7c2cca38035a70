import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from boxconvex import (Box, Builtin, Expression, MultiIndex, PointSystem, PointSystemError,
                       PreconditionError, certify_box_convexity, divdiff_1d, divdiff_multi,
                       divdiff_report, divdiff_right_limit)
from boxconvex.catalog import random_pseudopoly
from boxconvex.divdiff import batch_expanded, batch_nested, sample_grid, sample_random
from boxconvex.exprfn import Evaluator, Product

X = Expression.parse("x1", 1)
SQ = Expression.parse("x1^2", 1)


def test_1d_examples():
    for m in ("nested", "expanded"):
        assert divdiff_1d((0, 1), X, m) == 1.0
        assert divdiff_1d((1, 2, 4), Expression.parse("7", 1), m) == pytest.approx(0.0, abs=1e-12)
        assert divdiff_1d((0, 1, 2), Expression.parse("x1^3", 1), m) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(PointSystemError):
        divdiff_1d((0, 1, 0), X)


def test_multi_examples():
    xy = Expression.parse("x1*x2", 2)
    s = PointSystem(((0, 1), (0, 1)))
    assert divdiff_multi(s, xy) == 1.0
    s = PointSystem(((0, 1, 2), (0, 1)))
    for m in ("nested", "expanded"):
        assert divdiff_multi(s, Expression.parse("x1^2*x2", 2), m) == pytest.approx(1.0, abs=1e-12)
        assert divdiff_multi(s, Expression.parse("4.5", 2), m) == 0.0


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True).filter(
    lambda v: min(np.diff(sorted(v))) > 0.05))
def test_1d_matches_polynomial_fit(x):
    """[x_0..x_n; f] is the leading coefficient of the interpolating polynomial."""
    f = Expression.parse("exp(0.8*x1) - x1^4 + abs(x1)", 1)
    n = len(x) - 1
    lead = np.polyfit(x, f.values(np.array(x)), n)[0]
    ours = divdiff_1d(x, f)
    assert ours == pytest.approx(lead, rel=1e-6, abs=1e-8)


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    f = Expression.parse("exp(0.5*x1 - 0.3*x2)*x3^2 + abs(x1 - x3)*x2^3", 3)
    for _ in range(20):
        nodes = [tuple(rng.uniform(-1, 1, size=k)) for k in (3, 2, 4)]
        base = divdiff_report(PointSystem(tuple(nodes)), f, "expanded")
        for order in [(1, 2, 3), (3, 2, 1), (2, 3, 1)]:
            v = divdiff_multi(PointSystem(tuple(nodes)), f, "nested", order)
            assert abs(v - base.value) <= 1e-10 * max(base.scale, abs(base.value))
        shuffled = [tuple(rng.permutation(t)) for t in nodes]
        v = divdiff_multi(PointSystem(tuple(shuffled)), f, "nested")
        assert abs(v - base.value) <= 1e-10 * max(base.scale, abs(base.value))


def test_annihilates_pseudopolynomials():
    rng = np.random.default_rng(4)
    for n in [(1,), (2, 2), (3, 1), (2, 1, 3)]:
        for _ in range(5):
            W = random_pseudopoly(rng, n)
            nodes = sample_random(rng, Box.cube(-1, 2, len(n)), MultiIndex(n), 40)
            value, scale = batch_expanded(W, nodes)
            assert np.all(np.abs(value) <= 1e-9 * np.maximum(scale, 1e-300))


def test_product_rule():
    rng = np.random.default_rng(5)
    g = Expression.parse("exp(x1)*x2^3", 2)
    h = Expression.parse("abs(x1 - 0.2)^3", 1)
    f = Product((((1, 3), g), ((2,), h)), 3)
    for _ in range(20):
        x1, x2, x3 = (tuple(rng.uniform(-1, 1, size=k)) for k in (3, 4, 2))
        lhs = divdiff_multi(PointSystem((x1, x2, x3)), f)
        rhs = divdiff_multi(PointSystem((x1, x3)), g) * divdiff_1d(x2, h)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_batch_routes_agree_for_d3_all_orders():
    rng = np.random.default_rng(6)
    f = Builtin("exp_sum", (0.4, -0.9, 1.1))
    nodes = sample_random(rng, Box.cube(-1, 1, 3), MultiIndex((2, 3, 1)), 100)
    b, scale = batch_expanded(f, nodes)
    for order in [(1, 2, 3), (2, 1, 3), (3, 1, 2)]:
        a = batch_nested(f, nodes, order)
        assert np.all(np.abs(a - b) <= 1e-9 * scale)


def test_right_limit_examples():
    two_x = Expression.parse("2*x1", 1)
    assert divdiff_right_limit((0, 1), 1, SQ, two_x) == pytest.approx(1.0)
    total = sum(divdiff_right_limit((0, 1), k, SQ, two_x) for k in (1, 2))
    assert total == pytest.approx(2.0)
    assert total == pytest.approx(divdiff_1d((0, 1), two_x))
    lin = Expression.parse("3*x1 - 1", 1)
    for k in (1, 2, 3):
        assert divdiff_right_limit((0.2, 1.0, 1.7), k, lin, Expression.parse("3", 1)) == pytest.approx(0, abs=1e-12)


def test_right_limit_matches_nearby_difference():
    f = Expression.parse("exp(x1) + abs(x1 - 0.5)", 1)
    fr = Expression.parse("exp(x1) + tpow_plus(x1 - 0.5, 0) - tpow_minus(x1 - 0.5, 0)", 1)
    pts = (-0.3, 0.5, 1.2)
    for k in (1, 2, 3):
        h = 1e-7
        near = divdiff_1d((pts[k - 1] + h,) + pts, f)
        assert divdiff_right_limit(pts, k, f, fr) == pytest.approx(near, rel=1e-5, abs=1e-5)


def test_right_limit_preconditions():
    with pytest.raises(PreconditionError):
        divdiff_right_limit((0.0,), 1, SQ, SQ)


def test_certify_examples():
    cert = certify_box_convexity(Expression.parse("x1^2*x2^2", 2), (2, 2), Box.cube(0, 3, 2), trials=500)
    assert cert.certified and cert.min_value == pytest.approx(1.0, abs=1e-9)
    cert = certify_box_convexity(Expression.parse("-x1^2", 1), (2,), Box.cube(-1, 1, 1), trials=50)
    assert not cert.certified
    assert cert.witness_value == pytest.approx(-1.0)
    assert divdiff_multi(cert.witness, Expression.parse("-x1^2", 1)) == pytest.approx(cert.witness_value)
    cert = certify_box_convexity(Expression.parse("exp(x1+x2)", 2), (2, 2), Box.cube(-1, 1, 2), trials=300)
    assert cert.certified and cert.min_value > 0


def test_certify_deterministic_and_grid_sampler():
    f = Expression.parse("x1^3*x2^2 - x1*x2", 2)
    box = Box.cube(-1, 1, 2)
    a = certify_box_convexity(f, (2, 2), box, trials=200, seed=9)
    b = certify_box_convexity(f, (2, 2), box, trials=200, seed=9)
    assert a.to_json() == b.to_json() and not a.certified
    g = certify_box_convexity(Expression.parse("x1^4*x2^2", 2), (2, 2), box, sampler="grid", trials=200)
    assert g.certified


def test_certifier_preconditions():
    f = Expression.parse("x1^2", 1)
    with pytest.raises(PreconditionError):
        certify_box_convexity(f, (2,), Box.from_intervals([(0, math.inf)]))
    with pytest.raises(PreconditionError):
        certify_box_convexity(f, (2,), Box.cube(0, 1, 1), trials=0)


def test_samplers_respect_separation():
    rng = np.random.default_rng(7)
    box = Box.from_intervals([(0, 1), (-2, 5)])
    for nodes in (sample_random(rng, box, MultiIndex((4, 2)), 300, 0.01),
                  sample_grid(rng, box, MultiIndex((4, 2)), 300)):
        for i, x in enumerate(nodes):
            w = box.width(i)
            assert np.all(np.diff(x, axis=1) >= 0.01 * w)
            assert np.all((x > box.lower[i]) & (x < box.upper[i]))


# antiderivative identity: F = int_alpha^x f, with closed form for checking
f_smooth = Expression.parse("exp(0.7*x1) + x1^3 - 2*x1", 1)
F_smooth = Expression.parse("exp(0.7*x1)/0.7 + x1^4/4 - x1^2", 1)


@pytest.mark.parametrize("x", [(0.0, 0.4, 1.1), (-0.5, 0.3, 0.9, 1.6), (0.2, -0.7, 1.3, 0.5, 2.0)])
def test_antiderivative_identity(x):
    n = len(x) - 1
    direct = divdiff_1d(x, F_smooth)

    def integrand(t):
        pts = [t * xi + (1 - t) * x[0] for xi in x[1:]]
        return t ** (n - 1) * divdiff_1d(pts, f_smooth)

    via, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    assert direct == pytest.approx(via, abs=1e-6)


def _integrate_axis(f, axis, alpha, m=40):
    """x -> int_alpha^{x_axis} f(..., t, ...) dt by Gauss-Legendre on m points."""
    t, w = np.polynomial.legendre.leggauss(m)

    def fn(P):
        lo, hi = alpha, P[:, axis - 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        out = np.zeros(P.shape[0])
        for tk, wk in zip(t, w):
            Q = P.copy()
            Q[:, axis - 1] = mid + half * tk
            out += wk * half * f.values(Q)
        return out

    return Evaluator(fn, f.arity, f"int_{axis}")


def test_integration_raises_order():
    box = Box.cube(-1, 1, 2)
    for text, n in [("exp(x1)*x2^2", (1, 2)), ("exp(x1 + 0.5*x2)", (2, 1)), ("x1^2*exp(x2)", (2, 2))]:
        f = Expression.parse(text, 2)
        assert certify_box_convexity(f, n, box, trials=200, seed=1).certified
        for axis in (1, 2):
            F = _integrate_axis(f, axis, -1.0)
            up = tuple(v + (1 if i == axis - 1 else 0) for i, v in enumerate(n))
            assert certify_box_convexity(F, up, box, trials=200, seed=1, separation=0.02).certified
