import math

import numpy as np
import pytest
from brep2shape.core.api import (
    ArgumentError,
    DegeneracyError,
    DomainError,
    HomogeneousPoint,
    KnotVector,
    NurbsCurve,
    NurbsSurface,
    TopologyError,
    TrimLoop,
    bernstein,
    bernstein_basis,
    bspline_basis,
    dehomogenize,
    eval_bezier_segment,
    eval_curve,
    eval_surface,
    line,
    rational_circle,
    rational_ellipse,
    reverse_curve,
    segment_from_points,
)
from brep2shape.core.bezier import (
    BezierTriangle,
    eval_bezier_triangle,
    triangle_basis,
    triangle_indices,
    triangle_index,
)
from brep2shape.components.solids import plane
from conftest import random_curve, random_surface


def test_bernstein():
    assert bernstein(0, 2, 0.0) == 1.0
    assert bernstein(1, 2, 0.5) == 0.5
    assert abs(sum(bernstein(i, 3, 0.37) for i in range(4)) - 1.0) < 1e-14
    with pytest.raises(ArgumentError):
        bernstein(3, 2, 0.5)
    with pytest.raises(ArgumentError):
        bernstein(-1, 2, 0.5)


def test_bernstein_basis_partition(rng):
    u = rng.random(50)
    for n in range(6):
        assert np.allclose(bernstein_basis(n, u).sum(axis=0), 1.0, atol=1e-14)


def test_bspline_degree_zero():
    knots = [0.0, 0.5, 1.0]
    assert bspline_basis(0, 0, 0.25, knots) == 1.0
    assert bspline_basis(1, 0, 0.25, knots) == 0.0
    assert bspline_basis(1, 0, 0.5, knots) == 1.0


def test_bspline_matches_bernstein(rng):
    knots = KnotVector([0, 0, 0, 0, 1, 1, 1, 1], 3)
    for u in rng.random(100):
        for i in range(4):
            assert abs(bspline_basis(i, 3, u, knots) - bernstein(i, 3, u)) < 1e-14


def test_bspline_partition(rng):
    knots = [0, 0, 0, 0.2, 0.5, 0.5, 0.9, 1, 1, 1]
    n = len(knots) - 3
    for u in rng.random(20):
        total = sum(bspline_basis(i, 2, u, knots) for i in range(n))
        assert abs(total - 1.0) < 1e-14
    assert bspline_basis(-1, 2, 0.3, knots) == 0.0
    assert bspline_basis(n + 5, 2, 0.3, knots) == 0.0


@pytest.mark.parametrize(
    "knots, degree",
    [
        ([0, 0, 1, 1], 2),  # too short
        ([0, 0, 0, 1, 1], 1),  # not clamped
        ([0, 0, 1, 0.5, 1, 1], 1),  # decreasing
        ([0, 0, 0.5, 0.5, 0.5, 1, 1], 1),  # interior multiplicity above degree
        ([1, 1, 1, 1], 1),  # empty range
    ],
)
def test_invalid_knots(knots, degree):
    with pytest.raises(ArgumentError):
        KnotVector(knots, degree)


def test_knot_vector_queries():
    kv = KnotVector([0, 0, 0, 0.25, 0.25, 0.5, 1, 1, 1], 2)
    assert kv.domain == (0.0, 1.0)
    assert kv.n_basis == 6
    assert kv.multiplicity(0.25) == 2
    assert kv.multiplicity(0.3) == 0
    assert kv.breaks() == [(0.25, 2), (0.5, 1)]
    assert kv.span(np.array([0.0, 0.3, 1.0])).tolist() == [2, 4, 5]
    with pytest.raises(DomainError):
        kv.check_domain(1.5)


def test_homogeneous_point():
    p = HomogeneousPoint.from_euclidean(1.0, 2.0, 3.0, w=2.0)
    assert p.as_array().tolist() == [2.0, 4.0, 6.0, 2.0]
    assert p.euclidean().tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(ArgumentError):
        HomogeneousPoint(1, 1, 1, 0.0)
    with pytest.raises(ArgumentError):
        HomogeneousPoint.from_euclidean(1, 1, 1, -1.0)


def test_curve_construction_errors():
    with pytest.raises(ArgumentError):
        NurbsCurve.from_points(1, [0, 0, 1, 1], np.zeros((3, 3)))
    with pytest.raises(ArgumentError):
        NurbsCurve.from_points(1, [0, 0, 1, 1], np.zeros((2, 3)), np.array([1.0, 0.0]))
    with pytest.raises(ArgumentError):
        NurbsCurve(1, [0, 0, 1, 1], np.zeros((2, 3)))


def test_eval_line():
    curve = line((0, 0, 0), (2, 0, 0))
    assert np.allclose(eval_curve(curve, 0.5), [1, 0, 0])
    assert eval_curve(curve, [0.0, 1.0]).shape == (2, 3)
    with pytest.raises(DomainError):
        eval_curve(curve, 1.5)


def test_quarter_circle():
    s = math.sqrt(2) / 2
    pts = np.array([[1, 0, 0], [1, 1, 0], [0, 1, 0]])
    curve = NurbsCurve.from_points(2, [0, 0, 0, 1, 1, 1], pts, np.array([1, s, 1]))
    assert np.allclose(eval_curve(curve, 0.5), [s, s, 0], atol=1e-15)


def test_full_circle_radius(rng):
    curve = rational_circle(radius=1.0)
    pts = eval_curve(curve, rng.random(1000))
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) < 1e-12


def test_ellipse(rng):
    curve = rational_ellipse(rx=2.0, ry=0.5)
    pts = eval_curve(curve, rng.random(200))
    assert np.allclose((pts[:, 0] / 2.0) ** 2 + (pts[:, 1] / 0.5) ** 2, 1.0, atol=1e-12)


def test_degenerate_weight():
    pw = np.array([[1.0, 0, 0, 1.0], [0, 0, 0, 1.0]])
    pw[0, 3] = 0.0
    with pytest.raises(DegeneracyError):
        dehomogenize(pw)


def test_reverse_curve(rng):
    curve = rational_circle()
    rev = reverse_curve(curve)
    u = rng.random(50)
    assert np.allclose(eval_curve(rev, u), eval_curve(curve, 1.0 - u), atol=1e-12)


def test_segment_from_points():
    s = math.sqrt(2) / 2
    seg = segment_from_points([(1, 0), (1, 1), (0, 1)], [1.0, s, 1.0])
    assert seg.degree == 2 and seg.span == (0.0, 1.0)
    assert np.allclose(seg.control_points[1], [s, s, 0, s])
    pts = eval_bezier_segment(seg, np.linspace(0, 1, 11))
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    with pytest.raises(ArgumentError):
        segment_from_points([(0, 0, 0), (1, 0, 0)], [1.0, 0.0])


def test_eval_plane():
    surface = plane((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0))
    assert np.allclose(eval_surface(surface, 0.25, 0.75), [0.25, 0.75, 0])
    assert np.allclose(eval_surface(surface, 0.0, 0.0), surface.point(0, 0).euclidean())
    assert eval_surface(surface, [0.1, 0.2], [0.3, 0.4]).shape == (2, 3)


def test_cylinder_surface_radius(rng, solids):
    wall = solids["cylinder"].face(0).surface
    pts = eval_surface(wall, rng.random(500), rng.random(500))
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0)) < 1e-12


def random_affine(rng):
    return rng.normal(size=(3, 3)) + 2 * np.eye(3), rng.normal(size=3)


@pytest.mark.parametrize("degree", [1, 2, 3, 5])
def test_curve_affine_invariance(rng, degree):
    curve = random_curve(rng, degree, degree + 4)
    a, b = random_affine(rng)
    moved = NurbsCurve.from_points(
        degree, curve.knots, curve.points @ a.T + b, curve.weights
    )
    u = rng.random(50)
    expected = eval_curve(curve, u) @ a.T + b
    assert np.allclose(eval_curve(moved, u), expected, atol=1e-10)


def test_surface_affine_invariance(rng):
    surface = random_surface(rng, 3, 2, 5, 4)
    a, b = random_affine(rng)
    moved = NurbsSurface.from_points(
        3,
        2,
        surface.knots_u.knots,
        surface.knots_v.knots,
        surface.points @ a.T + b,
        surface.control_net[..., 3],
    )
    u, v = rng.random(50), rng.random(50)
    expected = eval_surface(surface, u, v) @ a.T + b
    assert np.allclose(eval_surface(moved, u, v), expected, atol=1e-10)


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_unit_weights_give_bspline_curve(rng, degree):
    knots = random_curve(rng, degree, degree + 3).knots
    pts = rng.uniform(-1, 1, (degree + 3, 3))
    curve = NurbsCurve.from_points(degree, knots, pts)
    for u in rng.random(20):
        basis = [bspline_basis(i, degree, u, knots) for i in range(len(pts))]
        assert np.allclose(eval_curve(curve, u), np.dot(basis, pts), atol=1e-12)


def test_unit_weights_give_bspline_surface(rng):
    nurbs = random_surface(rng, 2, 3, 4, 5)
    ku, kv = nurbs.knots_u.knots, nurbs.knots_v.knots
    pts = rng.uniform(-1, 1, (4, 5, 3))
    surface = NurbsSurface.from_points(2, 3, ku, kv, pts)
    for u, v in rng.random((20, 2)):
        bu = np.array([bspline_basis(i, 2, u, ku) for i in range(4)])
        bv = np.array([bspline_basis(j, 3, v, kv) for j in range(5)])
        expected = np.einsum("i,j,ijk->k", bu, bv, pts)
        assert np.allclose(eval_surface(surface, u, v), expected, atol=1e-12)


def test_surface_construction_errors():
    with pytest.raises(ArgumentError):
        NurbsSurface(1, 1, [0, 0, 1, 1], [0, 0, 1, 1], np.ones((3, 2, 4)))


def test_trim_loop_orientation():
    loop = TrimLoop(pcurves=[rational_circle((0.5, 0.5), 0.25)], orientation="inner")
    assert loop.is_closed()
    assert loop.signed_area() > 0
    fixed = loop.normalized()
    assert fixed.signed_area() < 0
    assert abs(abs(fixed.signed_area()) - math.pi / 16) < 1e-3


def test_open_trim_loop():
    loop = TrimLoop(pcurves=[line((0, 0), (1, 0)), line((1, 0), (1, 1))])
    assert not loop.is_closed()
    with pytest.raises(TopologyError):
        loop.check_closed()


def test_triangle_indices():
    assert triangle_indices(2) == ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0))
    assert triangle_index(2, 1, 1) == 4
    assert len(triangle_indices(6)) == 28


def test_triangle_basis(rng):
    k = triangle_index(2, 1, 1)
    assert abs(triangle_basis(2, 0.5, 0.5)[k, 0] - 0.5) < 1e-15
    u = rng.random(100) * 0.5
    v = rng.random(100) * 0.5
    for d in (1, 3, 6):
        assert np.allclose(triangle_basis(d, u, v).sum(axis=0), 1.0, atol=1e-14)


def test_triangle_corners(rng):
    n = len(triangle_indices(3))
    pts = rng.uniform(-1, 1, (n, 3))
    pw = np.concatenate([pts, np.ones((n, 1))], axis=1)
    tri = BezierTriangle(pw)
    assert np.allclose(eval_bezier_triangle(tri, 0.0, 0.0), tri.corner(0, 0))
    assert np.allclose(eval_bezier_triangle(tri, 1.0, 0.0), tri.corner(3, 0))
    assert np.allclose(eval_bezier_triangle(tri, 0.0, 1.0), tri.corner(0, 3))
    with pytest.raises(DomainError):
        eval_bezier_triangle(tri, 0.7, 0.7)
    with pytest.raises(ArgumentError):
        BezierTriangle(pw[:5])
