import math

import numpy as np
import pytest
from brep2shape.components.boundary import (
    BoundaryErrorReport,
    arc_length,
    boundary_rmse,
    chord_to_arc,
    convergence_study,
    curvature,
    flatten_pcurve,
    reference_curve,
)
from brep2shape.core.api import ArgumentError, line, rational_circle


def test_arc_length_circle():
    curve = rational_circle(radius=2.0)
    assert abs(arc_length(curve, 0.0, 1.0) - 4 * math.pi) < 1e-6
    assert abs(arc_length(curve, 0.0, 0.25) - math.pi) < 1e-6


def test_chord_to_arc():
    assert abs(chord_to_arc(line((0, 0), (1, 1)), 0.2, 0.7) - 1.0) < 1e-9
    quarter = chord_to_arc(rational_circle(), 0.0, 0.25)
    assert abs(quarter - math.sqrt(2) / (math.pi / 2)) < 1e-6
    with pytest.raises(ArgumentError):
        chord_to_arc(rational_circle(), 0.5, 0.5)


@pytest.mark.parametrize("h", [0.05, 0.02, 0.01])
def test_chord_to_arc_expansion(h):
    # unit curvature, so 1 - ratio approaches s**2 / 24
    curve = rational_circle()
    t0, t1 = 0.1, 0.1 + h / (2 * math.pi)
    s = arc_length(curve, t0, t1)
    expected = s**2 / 24
    gap = 1.0 - chord_to_arc(curve, t0, t1)
    assert abs(gap - expected) / expected < 0.05


def test_curvature_circle():
    curve = rational_circle(radius=0.5)
    for t in (0.1, 0.3, 0.6, 0.9):
        assert abs(curvature(curve, t, 1e-5) - 2.0) < 1e-3


@pytest.mark.parametrize("tau", [0.99, 0.995, 0.999])
def test_flatten_pcurve(tau):
    curve = rational_circle((0.5, 0.5), 0.25)
    t = flatten_pcurve(curve, tau)
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.all(np.diff(t) > 0)
    for a, b in zip(t[:-1], t[1:]):
        assert chord_to_arc(curve, a, b) >= tau
    # the knots of the curve are always breakpoints
    assert {0.25, 0.5, 0.75} <= set(t.tolist())


def test_flatten_tighter_threshold_refines():
    curve = rational_circle()
    assert len(flatten_pcurve(curve, 0.999)) > len(flatten_pcurve(curve, 0.99))


def test_flatten_line_is_one_piece():
    assert flatten_pcurve(line((0, 0), (1, 0)), 0.995).tolist() == [0.0, 1.0]


@pytest.mark.parametrize("tau", [0.0, 1.0, 1.5, -0.1])
def test_flatten_invalid_threshold(tau):
    with pytest.raises(ArgumentError):
        flatten_pcurve(rational_circle(), tau)


def test_boundary_rmse_line_is_exact():
    report = boundary_rmse(line((0, 0), (3, 4)), [0.0, 0.5, 1.0])
    assert report.rmse < 1e-12
    assert abs(report.length - 5.0) < 1e-9
    assert report.h == 0.5
    assert np.allclose(report.ratios, 1.0)
    assert report.converged


def test_boundary_rmse_report():
    curve = rational_circle()
    t = np.linspace(0, 1, 17)
    report = boundary_rmse(curve, t)
    assert len(report.ratios) == len(report.curvatures) == 16
    assert np.all((report.ratios > 0) & (report.ratios <= 1))
    assert np.allclose(report.curvatures, 1.0, atol=1e-3)
    assert abs(report.length - 2 * math.pi) < 1e-6
    assert 0 < report.rmse < 0.05


@pytest.mark.parametrize("breaks", [[0.0], [0.0, 0.5, 0.5, 1.0], [1.0, 0.0]])
def test_boundary_rmse_invalid(breaks):
    with pytest.raises(ArgumentError):
        boundary_rmse(rational_circle(), breaks)


def test_combine_reports():
    a = boundary_rmse(line((0, 0), (1, 0)), [0.0, 1.0])
    b = boundary_rmse(rational_circle(), np.linspace(0, 1, 9))
    combined = BoundaryErrorReport.combine([a, b], unconverged=2)
    assert abs(combined.length - (a.length + b.length)) < 1e-12
    assert combined.rmse < b.rmse
    assert len(combined.ratios) == 9
    assert combined.h == 1.0
    assert not combined.converged
    assert BoundaryErrorReport.combine([]).length == 0.0


@pytest.mark.parametrize("kind, lo, hi", [("circle", 1.9, 2.1), ("ellipse", 1.8, 2.2)])
def test_second_order_convergence(kind, lo, hi):
    hs, errors, slope = convergence_study(reference_curve(kind), levels=6)
    assert len(hs) == len(errors) == 6
    assert np.all(np.diff(errors) < 0)
    assert lo <= slope <= hi


def test_convergence_arguments():
    with pytest.raises(ArgumentError):
        reference_curve("spiral")
    with pytest.raises(ArgumentError):
        convergence_study(rational_circle(), levels=1)
