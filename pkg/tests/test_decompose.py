import numpy as np
import pytest
from brep2shape.components.decompose import (
    conversion_matrix,
    curve_to_bezier_segments,
    elevate_segment_degree,
    elevate_triangle_degree,
    insert_knot,
    rectangle_to_triangles,
    restrict_rectangle,
    surface_to_bezier_rectangles,
    triangle_to_rectangle_params,
    triangle_to_surface_params,
)
from brep2shape.core.api import (
    ArgumentError,
    BezierTriangle,
    DomainError,
    eval_bezier_rectangle,
    eval_bezier_segment,
    eval_bezier_triangle,
    eval_curve,
    eval_surface,
    line,
    rational_circle,
)
from brep2shape.core.bezier import segment_from_points, triangle_indices
from brep2shape.core.errors import MultiplicityError
from conftest import random_curve, random_surface


def gap(a, b):
    return np.max(np.abs(a - b))


def triangle_samples(rng, n=200):
    u = rng.random(n)
    v = rng.random(n) * (1.0 - u)
    return u, v


# -----------------------------------------------------------------------------
# Knot insertion
# -----------------------------------------------------------------------------
def test_insert_into_line():
    curve = insert_knot(line((0, 0, 0), (1, 0, 0)), 0.5)
    assert curve.knots.tolist() == [0, 0, 0.5, 1, 1]
    assert np.allclose(curve.points[1], [0.5, 0, 0])


def test_insert_preserves_shape(rng):
    curve = random_curve(rng, degree=3, n_ctrl=7)
    refined = insert_knot(curve, 0.37, times=2)
    assert len(refined.knots) == len(curve.knots) + 2
    u = rng.random(500)
    assert gap(eval_curve(refined, u), eval_curve(curve, u)) < 1e-12


def test_insert_existing_knot(rng):
    curve = random_curve(rng, degree=3, n_ctrl=6)
    value = float(curve.knots[4])
    refined = insert_knot(curve, value)
    assert refined.knot_vector.multiplicity(value) == 2
    u = rng.random(100)
    assert np.allclose(eval_curve(refined, u), eval_curve(curve, u), atol=1e-12)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.2, 1.5])
def test_insert_outside_domain(u):
    with pytest.raises(DomainError):
        insert_knot(line((0, 0, 0), (1, 0, 0)), u)


def test_insert_multiplicity_overflow():
    curve = line((0, 0, 0), (1, 0, 0))
    with pytest.raises(MultiplicityError):
        insert_knot(curve, 0.5, times=2)
    with pytest.raises(MultiplicityError):
        insert_knot(insert_knot(curve, 0.5), 0.5)
    with pytest.raises(ArgumentError):
        insert_knot(curve, 0.5, times=0)


# -----------------------------------------------------------------------------
# Curves to segments
# -----------------------------------------------------------------------------
def test_circle_segments(rng):
    curve = rational_circle()
    segments = curve_to_bezier_segments(curve, entity=3)
    assert len(segments) == 4
    spans = [(0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]
    assert [s.span for s in segments] == spans
    for seg in segments:
        assert seg.degree == 2 and seg.entity == 3
        t = rng.random(100)
        a, b = seg.span
        expected = eval_curve(curve, a + t * (b - a))
        assert np.allclose(eval_bezier_segment(seg, t), expected, atol=1e-12)


@pytest.mark.parametrize("degree, n_ctrl", [(1, 4), (2, 5), (3, 7), (4, 9)])
def test_segments_reproduce_curve(rng, degree, n_ctrl):
    curve = random_curve(rng, degree=degree, n_ctrl=n_ctrl)
    segments = curve_to_bezier_segments(curve)
    assert len(segments) == n_ctrl - degree
    for seg in segments:
        t = np.linspace(0, 1, 33)
        a, b = seg.span
        expected = eval_curve(curve, a + t * (b - a))
        assert gap(eval_bezier_segment(seg, t), expected) < 1e-10


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5])
def test_random_curves_decompose_exactly(rng, degree):
    worst = 0.0
    for _ in range(40):
        n_ctrl = degree + int(rng.integers(1, 6))
        curve = random_curve(rng, degree=degree, n_ctrl=n_ctrl)
        for seg in curve_to_bezier_segments(curve):
            a, b = seg.span
            t = rng.random(100)
            expected = eval_curve(curve, a + t * (b - a))
            worst = max(worst, gap(eval_bezier_segment(seg, t), expected))
    assert worst < 1e-11


def test_single_span_curve():
    segments = curve_to_bezier_segments(line((0, 0, 0), (1, 2, 3)))
    assert len(segments) == 1
    assert np.allclose(segments[0].control_points[:, :3], [[0, 0, 0], [1, 2, 3]])


# -----------------------------------------------------------------------------
# Surfaces to rectangles
# -----------------------------------------------------------------------------
def test_surface_rectangles(rng):
    surface = random_surface(rng, 2, 3, 5, 6)
    grid = surface_to_bezier_rectangles(surface, entity=1)
    assert len(grid) == 3 and all(len(row) == 3 for row in grid)
    for row in grid:
        for rect in row:
            assert (rect.degree_u, rect.degree_v) == (2, 3)
            (u0, u1), (v0, v1) = rect.cell
            s, t = rng.random(50), rng.random(50)
            expected = eval_surface(surface, u0 + s * (u1 - u0), v0 + t * (v1 - v0))
            assert gap(eval_bezier_rectangle(rect, s, t), expected) < 1e-10


@pytest.mark.parametrize("degree_u", [1, 2, 3, 4, 5])
def test_random_surfaces_decompose_exactly(rng, degree_u):
    worst = 0.0
    for _ in range(20):
        degree_v = int(rng.integers(1, 6))
        nu, nv = degree_u + int(rng.integers(1, 4)), degree_v + int(rng.integers(1, 4))
        surface = random_surface(rng, degree_u, degree_v, nu, nv)
        for row in surface_to_bezier_rectangles(surface):
            for rect in row:
                (u0, u1), (v0, v1) = rect.cell
                s, t = rng.random(25), rng.random(25)
                expected = eval_surface(surface, u0 + s * (u1 - u0), v0 + t * (v1 - v0))
                worst = max(worst, gap(eval_bezier_rectangle(rect, s, t), expected))
    assert worst < 1e-11


def test_restrict_rectangle(rng):
    surface = random_surface(rng, 2, 2, 3, 3)
    rect = surface_to_bezier_rectangles(surface)[0][0]
    sub = restrict_rectangle(rect, (0.25, 0.75), (0.5, 1.0))
    assert sub.cell == ((0.25, 0.75), (0.5, 1.0))
    s, t = rng.random(50), rng.random(50)
    expected = eval_bezier_rectangle(rect, 0.25 + 0.5 * s, 0.5 + 0.5 * t)
    assert np.allclose(eval_bezier_rectangle(sub, s, t), expected, atol=1e-12)
    with pytest.raises(DomainError):
        restrict_rectangle(rect, (0.5, 0.5), (0, 1))


# -----------------------------------------------------------------------------
# Degree elevation
# -----------------------------------------------------------------------------
def test_elevate_line_segment():
    seg = elevate_segment_degree(segment_from_points([(0, 0, 0), (1, 0, 0)]), 2)
    assert seg.degree == 2
    assert np.allclose(seg.control_points[:, :3], [[0, 0, 0], [0.5, 0, 0], [1, 0, 0]])


def test_elevate_rational_segment(rng):
    seg = curve_to_bezier_segments(rational_circle())[1]
    high = elevate_segment_degree(seg, 5)
    assert high.degree == 5 and high.span == seg.span
    t = rng.random(200)
    assert gap(eval_bezier_segment(high, t), eval_bezier_segment(seg, t)) < 1e-12
    assert elevate_segment_degree(seg, 2) is seg
    with pytest.raises(ArgumentError):
        elevate_segment_degree(seg, 1)


def test_elevate_triangle(rng):
    n = len(triangle_indices(2))
    pts, w = rng.uniform(-1, 1, (n, 3)), rng.uniform(0.5, 2, (n, 1))
    pw = np.concatenate([pts, w], axis=1)
    pw[:, :3] *= pw[:, 3:]
    tri = BezierTriangle(pw, entity=4)
    high = elevate_triangle_degree(tri, 6)
    assert high.degree == 6 and high.entity == 4
    assert len(high.control_points) == 28
    u, v = triangle_samples(rng)
    expected = eval_bezier_triangle(tri, u, v)
    assert gap(eval_bezier_triangle(high, u, v), expected) < 1e-12
    with pytest.raises(ArgumentError):
        elevate_triangle_degree(high, 3)


# -----------------------------------------------------------------------------
# Rectangle to triangles
# -----------------------------------------------------------------------------
def test_conversion_matrix_rows():
    M = conversion_matrix(2, 3)
    assert M.shape == (21, 12)
    # Affine invariance: every row is a partition of unity
    assert np.allclose(M.sum(axis=1), 1.0)


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_rectangle_to_triangles(rng, p, q):
    surface = random_surface(rng, p, q, p + 1, q + 1)
    rect = surface_to_bezier_rectangles(surface)[0][0]
    lower, upper = rectangle_to_triangles(rect)
    assert lower.degree == upper.degree == p + q
    assert (lower.half, upper.half) == ("lower", "upper")
    u, v = triangle_samples(rng)
    lower_pts = eval_bezier_triangle(lower, u, v)
    upper_pts = eval_bezier_triangle(upper, u, v)
    assert gap(lower_pts, eval_bezier_rectangle(rect, u, v)) < 1e-12
    assert gap(upper_pts, eval_bezier_rectangle(rect, 1 - u, 1 - v)) < 1e-12


def test_triangle_surface_params(rng):
    surface = random_surface(rng, 2, 2, 4, 4)
    for row in surface_to_bezier_rectangles(surface):
        for rect in row:
            for tri in rectangle_to_triangles(rect):
                u, v = triangle_samples(rng, 50)
                s, t = triangle_to_surface_params(tri, u, v)
                expected = eval_surface(surface, s, t)
                assert gap(eval_bezier_triangle(tri, u, v), expected) < 1e-10
                a, b = triangle_to_rectangle_params(tri, u, v)
                assert np.all((a >= 0) & (a <= 1) & (b >= 0) & (b <= 1))
