import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import BSpline

from gmsurf.harness.presets import circular_arc, graded_breaks, refine
from gmsurf.nurbs import (DomainError, GeometryError, KnotVector, NurbsCurve, bspline_basis,
                          bspline_basis_derivs, curve_eval, curve_points, find_span, frame,
                          greville, make_mesh, nurbs_basis_derivs, read_curve,
                          validate_for_solver, write_curve)

W = math.sqrt(0.5)


def quarter_circle(r=1.0):
    return NurbsCurve.from_arrays(2, [0, 0, 0, 1, 1, 1], [[r, 0], [r, r], [0, r]], [1, W, 1])


def random_curve(seed, n_spans=5, p=3):
    rng = np.random.default_rng(seed)
    inner = np.sort(rng.uniform(0.05, 0.95, n_spans - 1))
    knots = np.concatenate([np.zeros(p + 1), inner, np.ones(p + 1)])
    n = len(knots) - p - 1
    P = np.cumsum(rng.uniform(0.2, 1.0, (n, 2)), axis=0)
    return NurbsCurve.from_arrays(p, knots, P, rng.uniform(0.5, 2.0, n))


# -- knot vectors and spans --------------------------------------------------

def test_knot_vector_rejects_bad_input():
    with pytest.raises(GeometryError):
        KnotVector([0, 0, 1, 0.5, 1, 1], 1)
    with pytest.raises(GeometryError):
        KnotVector([0, 0.1, 0, 1, 1, 1], 2)
    with pytest.raises(GeometryError):
        KnotVector([0, 0, 0, 1, 1], 2)
    with pytest.raises(GeometryError):
        KnotVector([0, 0, 0, 1, 1, 1], 0)


def test_find_span_convention():
    kv = KnotVector([0, 0, 0, 0.5, 1, 1, 1], 2)
    assert find_span(kv, 0.0) == 2
    assert find_span(kv, 0.5) == 3
    assert find_span(kv, 1.0) == 3
    with pytest.raises(DomainError):
        find_span(kv, 1.1)
    with pytest.raises(DomainError):
        find_span(kv, float("nan"))


def test_basis_hand_values():
    kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
    np.testing.assert_allclose(bspline_basis(kv, 0.5), [0.25, 0.5, 0.25], atol=1e-15)
    kv = KnotVector([0, 0, 0, 0.5, 1, 1, 1], 2)
    np.testing.assert_allclose(bspline_basis(kv, 0.25), [0.25, 0.625, 0.125], atol=1e-15)


def test_derivative_order_above_degree_warns():
    kv = KnotVector([0, 0, 1, 1], 1)
    with pytest.warns(RuntimeWarning):
        tab = bspline_basis_derivs(kv, 0.3, 2)
    assert np.all(tab[:, 2] == 0)


@pytest.mark.parametrize("seed", range(4))
def test_basis_matches_scipy(seed):
    curve = random_curve(seed)
    kv = curve.knot_vector
    p, n = kv.degree, kv.n_basis
    splines = [BSpline(kv.knots, np.eye(n)[i], p) for i in range(n)]
    for xi in np.random.default_rng(seed).uniform(0, 1, 50):
        span = find_span(kv, xi)
        tab = bspline_basis_derivs(kv, xi, 2)
        for r in range(p + 1):
            i = span - p + r
            for k in range(3):
                ref = splines[i].derivative(k)(xi) if k else splines[i](xi)
                assert tab[r, k] == pytest.approx(float(ref), abs=1e-10, rel=1e-10)


@given(st.integers(0, 10_000), st.floats(0, 1))
def test_partition_of_unity(seed, xi):
    curve = random_curve(seed)
    _, tab = nurbs_basis_derivs(curve, xi, 2)
    assert abs(tab[:, 0].sum() - 1) < 1e-12
    assert abs(tab[:, 1].sum()) < 1e-9
    assert abs(tab[:, 2].sum()) < 1e-9
    assert np.all(tab[:, 0] >= -1e-15)


def test_partition_of_unity_dense():
    curve = random_curve(7)
    xs = np.random.default_rng(1).uniform(0, 1, 1000)
    sums = [nurbs_basis_derivs(curve, x, 1)[1].sum(axis=0) for x in xs]
    sums = np.array(sums)
    assert np.abs(sums[:, 0] - 1).max() < 1e-12
    assert np.abs(sums[:, 1]).max() < 1e-9


# -- geometry ------------------------------------------------------------------

def test_quarter_circle_exact():
    c = quarter_circle(2.5)
    xs = np.random.default_rng(0).uniform(0, 1, 1000)
    r = np.linalg.norm(curve_points(c, xs), axis=1)
    assert np.abs(r - 2.5).max() < 1e-12
    assert c.length == pytest.approx(math.pi * 2.5 / 2, abs=1e-10)


def test_refined_arc_is_same_curve():
    c = circular_arc(1.0, math.pi / 4, 3 * math.pi / 4)
    f = refine(c, 12, 1.3)
    xs = np.linspace(0, 1, 301)
    assert np.abs(np.linalg.norm(curve_points(f, xs), axis=1) - 1).max() < 1e-12
    assert f.length == pytest.approx(math.pi / 2, abs=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_curve_derivatives_finite_difference(seed):
    c = random_curve(seed)
    h = 1e-6
    for xi in np.random.default_rng(seed).uniform(0.05, 0.95, 20):
        # keep the stencil inside one span
        if np.any(np.abs(c.knots - xi) < 2 * h):
            continue
        e = curve_eval(c, xi)
        ep, em = curve_eval(c, xi + h), curve_eval(c, xi - h)
        d1 = (ep.point - em.point) / (2 * h)
        d2 = (ep.first_deriv - em.first_deriv) / (2 * h)
        assert np.linalg.norm(d1 - e.first_deriv) <= 1e-6 * np.linalg.norm(e.first_deriv)
        assert np.linalg.norm(d2 - e.second_deriv) <= 1e-6 * max(np.linalg.norm(e.second_deriv), 1)


@given(st.floats(0, 1))
def test_frame_orthonormal(xi):
    f = frame(random_curve(3), xi)
    t, n = f.tangent, f.normal
    assert abs(t @ n) < 1e-12
    assert abs(t @ t - 1) < 1e-12 and abs(n @ n - 1) < 1e-12
    assert f.normal_angle == pytest.approx(f.tangent_angle - math.pi / 2)


def test_circle_curvature_sign():
    # counter-clockwise traversal: d(alpha)/ds = +1/R
    c = quarter_circle(2.0)
    for xi in (0.0, 0.3, 1.0):
        assert frame(c, xi).inv_radius == pytest.approx(0.5, abs=1e-12)
    assert frame(c.reversed(), 0.4).inv_radius == pytest.approx(-0.5, abs=1e-12)


def test_reversed_same_points():
    c = random_curve(5)
    r = c.reversed()
    xs = np.linspace(0, 1, 41)
    np.testing.assert_allclose(curve_points(r, 1 - xs), curve_points(c, xs), atol=1e-13)


def test_arc_length_function():
    c = quarter_circle(1.0)
    assert c.arc_length(0.0) == 0.0
    assert c.arc_length(1.0) == pytest.approx(math.pi / 2, abs=1e-12)
    # by symmetry half the parameter range is half the length
    assert c.arc_length(0.5) == pytest.approx(math.pi / 4, abs=1e-12)


# -- mesh and collocation --------------------------------------------------------

def test_greville_examples():
    c = NurbsCurve.from_arrays(2, [0, 0, 0, 0.5, 1, 1, 1], np.zeros((4, 2)) + [[0, 0], [1, 0],
                                                                              [2, 1], [3, 0]])
    np.testing.assert_allclose(greville(c), [0, 0.25, 0.75, 1])
    lin = NurbsCurve.from_arrays(1, [0, 0, 1, 1], [[0, 0], [1, 0]])
    np.testing.assert_allclose(greville(lin), [0, 1])


def test_mesh_example():
    c = NurbsCurve.from_arrays(2, [0, 0, 0, 0.5, 1, 1, 1], [[0, 0], [1, 0], [2, 1], [3, 0]])
    m = make_mesh(c)
    np.testing.assert_array_equal(m.elements, [[0, 0.5], [0.5, 1]])
    # 0-based version of (1,2,3), (2,3,4)
    np.testing.assert_array_equal(m.connectivity, [[0, 1, 2], [1, 2, 3]])
    assert m.element_of(0.5) == 1 and m.element_of(1.0) == 1
    single = make_mesh(quarter_circle())
    assert single.n_elements == 1
    np.testing.assert_array_equal(single.connectivity, [[0, 1, 2]])


def test_graded_mesh_geometric():
    x = graded_breaks(50, 1.2)
    L = np.diff(x)
    np.testing.assert_allclose(L[1:25] / L[:24], 1.2, rtol=1e-12)
    np.testing.assert_allclose(L, L[::-1], rtol=1e-12)
    capped = np.diff(graded_breaks(50, 1.2, 20.0))
    assert capped.max() / capped.min() == pytest.approx(20.0)


def test_solver_validation():
    lin = NurbsCurve.from_arrays(1, [0, 0, 1, 1], [[0, 0], [1, 0]])
    with pytest.raises(GeometryError):
        validate_for_solver(lin)
    c0 = NurbsCurve.from_arrays(2, [0, 0, 0, 0.5, 0.5, 1, 1, 1],
                                [[0, 0], [1, 0], [2, 0], [3, 1], [4, 0]])
    with pytest.raises(GeometryError):
        validate_for_solver(c0)
    closed = NurbsCurve.from_arrays(2, [0, 0, 0, 0.5, 1, 1, 1],
                                    [[0, 0], [1, 1], [2, 0], [0, 0]])
    with pytest.raises(GeometryError):
        validate_for_solver(closed)


def test_curve_file_roundtrip(tmp_path):
    c = random_curve(2)
    path = tmp_path / "c.txt"
    write_curve(c, path)
    r = read_curve(path)
    np.testing.assert_array_equal(r.knots, c.knots)
    np.testing.assert_array_equal(r.control_points, c.control_points)
    np.testing.assert_array_equal(r.weights, c.weights)


def test_curve_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("degree 2\nknots 0 0 0 1 1 1\ncp 0 0\ncp 1 x\n")
    with pytest.raises(GeometryError, match=":4:"):
        read_curve(p)
    p.write_text("# only a comment\n")
    with pytest.raises(GeometryError):
        read_curve(p)
    p.write_text("degree 2\nknots 0 0 0 1 1 1\ncp 0 0\ncp 1 1 0.5\n")
    with pytest.raises(GeometryError):
        read_curve(p)
