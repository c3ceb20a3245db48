import numpy as np
import pytest
from brep2shape.components.primitives import (
    DecomposeSettings,
    decompose_model,
    max_residual,
    rank_primitives,
    segment_length,
    select_segments,
    select_triangles,
    triangle_area,
)
from brep2shape.components.solids import SOLID_KINDS, generate_solid
from brep2shape.core.api import ArgumentError, IntegrityError
from brep2shape.core.bezier import segment_from_points


@pytest.mark.parametrize("kind", SOLID_KINDS)
def test_primitives_reproduce_entities(solids, decomposed, kind):
    prims = decomposed[kind]
    prims.check_matches(solids[kind])
    prims.check_standardized()
    assert max_residual(solids[kind], prims) < 1e-9


def test_box_primitives(decomposed):
    prims = decomposed["box"]
    assert prims.n_triangles == 12 and prims.n_segments == 12
    for face in prims.faces:
        assert len(face.triangles) == 2
        assert all(t.degree == 6 for t in face.triangles)
        assert all(len(t.control_points) == 28 for t in face.triangles)
        assert sum(triangle_area(t) for t in face.triangles) == pytest.approx(1.0)
    for edge in prims.edges:
        (seg,) = edge.segments
        assert seg.degree == 3
        assert segment_length(seg) == pytest.approx(1.0)
    assert prims.control_points().shape == (12 * 28 + 12 * 4, 3)


def test_cylinder_primitives(decomposed):
    prims = decomposed["cylinder"]
    assert [len(f.triangles) for f in prims.faces] == [8, 8, 8]
    assert [len(e.segments) for e in prims.edges] == [4, 4, 1]


def test_trimmed_plate_primitives(decomposed):
    prims = decomposed["trimmed_plate"]
    assert prims.unconverged == 0
    for fid in (4, 5):
        face = prims.faces[fid]
        assert face.report.length > 0
        classes = {c.classification for c in face.cells}
        assert "exterior" in classes and "boundary" in classes
        retained = sum(1 for c in face.cells if c.classification != "exterior")
        assert len(face.triangles) == 2 * retained
    assert len(prims.faces[0].cells) == 1


def test_workers_do_not_change_output(solids, decomposed):
    threaded = decompose_model(solids["trimmed_plate"], DecomposeSettings(workers=3))
    expected = decomposed["trimmed_plate"].control_points()
    assert np.array_equal(threaded.control_points(), expected)


def test_lower_degrees(solids):
    settings = DecomposeSettings(triangle_degree=3, curve_degree=1)
    prims = decompose_model(solids["box"], settings)
    prims.check_standardized()
    assert all(len(t.control_points) == 10 for f in prims.faces for t in f.triangles)
    assert max_residual(solids["box"], prims) < 1e-12


@pytest.mark.parametrize(
    "settings",
    [
        dict(tau=1.5),
        dict(tau=0.5),
        dict(max_depth=0),
        dict(curve_degree=0),
        dict(workers=0),
    ],
)
def test_invalid_settings(solids, settings):
    with pytest.raises(ArgumentError):
        decompose_model(solids["box"], DecomposeSettings(**settings))


def test_degree_above_target(solids):
    # bilinear patches give degree 2 triangles, cylinder arcs are quadratic
    with pytest.raises(ArgumentError):
        decompose_model(solids["box"], DecomposeSettings(triangle_degree=1))
    with pytest.raises(ArgumentError):
        decompose_model(solids["cylinder"], DecomposeSettings(curve_degree=1))


def test_check_matches(solids, decomposed):
    with pytest.raises(IntegrityError):
        decomposed["box"].check_matches(solids["cylinder"])
    with pytest.raises(IntegrityError):
        max_residual(solids["hinge"], decomposed["box"])


def test_check_standardized(solids, decomposed):
    prims = decomposed["hinge"]
    prims.settings = DecomposeSettings(triangle_degree=5)
    try:
        with pytest.raises(IntegrityError):
            prims.check_standardized()
    finally:
        prims.settings = DecomposeSettings()


def test_rank_primitives(caplog):
    assert rank_primitives(["a", "b", "c"], [1.0, 3.0, 3.0], 2, "Face 0") == ["b", "c"]
    assert "exceed the cap" in caplog.text
    assert rank_primitives(["a", "b"], [1.0, 2.0], 5) == ["b", "a"]


def test_select_primitives(decomposed):
    plate = decomposed["trimmed_plate"]
    face = plate.faces[4]
    kept = select_triangles(face, 8)
    assert len(kept) == 8
    areas = [triangle_area(t) for t in face.triangles]
    assert min(triangle_area(t) for t in kept) >= sorted(areas)[-8] - 1e-15
    circle = plate.edges[12]
    assert len(select_segments(circle, 2)) == 2
    assert len(select_segments(circle, 8)) == len(circle.segments)


def test_segment_length():
    seg = segment_from_points([(0, 0, 0), (3, 0, 0), (3, 4, 0)])
    assert segment_length(seg) == pytest.approx(7.0)


def test_generated_box_dimensions():
    prims = decompose_model(generate_solid("box", {"sx": 2.0, "sy": 1.0, "sz": 1.0}))
    areas = sorted(sum(triangle_area(t) for t in f.triangles) for f in prims.faces)
    assert areas == pytest.approx([1, 1, 2, 2, 2, 2])
