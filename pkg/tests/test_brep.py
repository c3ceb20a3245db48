import numpy as np
import pytest
from brep2shape.components.brep import (
    BrepModel,
    Edge,
    Face,
    build_edge_graph,
    build_face_graph,
    edge_graph_from_face_graph,
    face_planarity_labels,
    is_planar,
)
from brep2shape.components.solids import (
    SOLID_KINDS,
    generate_dataset,
    generate_solid,
    plane,
    random_params,
)
from brep2shape.core.api import (
    ArgumentError,
    IntegrityError,
    TopologyError,
    TrimLoop,
    eval_curve,
    eval_surface,
    line,
)


def unit_face(fid=0, loops=()):
    surface = plane((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), loops)
    return Face(id=fid, surface=surface)


def unit_edge(eid, faces):
    return Edge(id=eid, curve=line((0, 0, 0), (1, 0, 0)), bounds_faces=tuple(faces))


# -----------------------------------------------------------------------------
# Models
# -----------------------------------------------------------------------------
@pytest.mark.parametrize(
    "kind, n_faces, n_edges, closed",
    [
        ("box", 6, 12, True),
        ("cylinder", 3, 3, True),
        ("trimmed_plate", 7, 15, True),
        ("lofted_wedge", 5, 9, True),
        ("hinge", 2, 7, False),
    ],
)
def test_solid_counts(solids, kind, n_faces, n_edges, closed):
    model = solids[kind]
    assert (model.n_faces, model.n_edges) == (n_faces, n_edges)
    assert model.is_closed == closed
    assert model.name == kind and model.label == SOLID_KINDS.index(kind)


@pytest.mark.parametrize("kind", SOLID_KINDS)
def test_edges_lie_on_faces(solids, kind):
    """Sampled edge points are close to a sampled point of each bounded face."""
    model = solids[kind]
    grid = np.linspace(0, 1, 201)
    uu, vv = np.meshgrid(grid, grid)
    for edge in model.edges:
        a, b = edge.curve.domain
        pts = eval_curve(edge.curve, np.linspace(a, b, 7))
        for fid in set(edge.bounds_faces):
            surface = model.face(fid).surface
            (u0, u1), (v0, v1) = surface.domain
            cloud = eval_surface(surface, u0 + uu * (u1 - u0), v0 + vv * (v1 - v0))
            cloud = cloud.reshape(-1, 3)
            for p in pts:
                assert np.min(np.linalg.norm(cloud - p, axis=1)) < 0.05


def test_validate_errors():
    with pytest.raises(IntegrityError):
        BrepModel(faces=[unit_face()], edges=[]).validate()
    with pytest.raises(IntegrityError, match="not dense"):
        faces = [unit_face(0), unit_face(0)]
        BrepModel(faces=faces, edges=[unit_edge(0, (0, 1))]).validate()
    with pytest.raises(IntegrityError, match="Edge 1"):
        edges = [unit_edge(0, (0,)), unit_edge(1, (0, 3))]
        BrepModel(faces=[unit_face(0)], edges=edges).validate()
    with pytest.raises(IntegrityError, match="not bounded"):
        faces = [unit_face(0), unit_face(1)]
        BrepModel(faces=faces, edges=[unit_edge(0, (0,))]).validate()
    with pytest.raises(IntegrityError, match="does not bound"):
        BrepModel(faces=[unit_face(0)], edges=[unit_edge(0, ())]).validate()


def test_validate_open_trim_loop():
    loop = TrimLoop(pcurves=[line((0.2, 0.2), (0.8, 0.2))], orientation="inner")
    with pytest.raises(TopologyError):
        BrepModel(faces=[unit_face(0, [loop])], edges=[unit_edge(0, (0,))]).validate()


def test_permuted(solids):
    model = solids["box"]
    order = [5, 4, 3, 2, 1, 0]
    moved = model.permuted(order).validate()
    assert moved.face(0).surface is model.face(5).surface
    expected = tuple(5 - f for f in model.edge(0).bounds_faces)
    assert moved.edge(0).bounds_faces == expected
    before = build_face_graph(model)
    after = build_face_graph(moved)
    assert len(after) == len(before)
    for (a, b), shared in before.adjacency.items():
        assert after.shared(5 - a, 5 - b) == shared


# -----------------------------------------------------------------------------
# Graphs
# -----------------------------------------------------------------------------
def test_box_graphs(solids):
    model = solids["box"]
    faces = build_face_graph(model)
    assert len(faces) == 12
    assert len(faces.triples()) == 12
    # opposite faces never touch
    for a in (0, 2, 4):
        assert not faces.adjacent(a, a + 1)
        assert len(faces.neighbors(a)) == 4
    edges = build_edge_graph(model)
    assert len(edges) == 36
    assert all(len(shared) == 1 for shared in edges.adjacency.values())


def test_cylinder_graphs(solids):
    model = solids["cylinder"]
    faces = build_face_graph(model)
    # the seam is self adjacency and is ignored
    assert faces.adjacency == {(0, 1): (0,), (0, 2): (1,)}
    assert not faces.adjacent(1, 2)
    edges = build_edge_graph(model)
    assert edges.adjacency == {(0, 1): (0,), (0, 2): (0,), (1, 2): (0,)}


def test_hinge_graphs(solids):
    model = solids["hinge"]
    faces = build_face_graph(model)
    assert faces.adjacency == {(0, 1): (0,)}
    assert faces.shared(1, 0) == (0,)
    edges = build_edge_graph(model)
    assert len(edges) == 12
    assert edges.shared(0, 1) == (0,) and edges.shared(0, 4) == (1,)
    assert not edges.adjacent(1, 4)


@pytest.mark.parametrize("kind", SOLID_KINDS)
def test_dual_edge_graph(solids, kind):
    model = solids[kind]
    direct = build_edge_graph(model)
    dual = edge_graph_from_face_graph(build_face_graph(model), model)
    assert dual.adjacency == direct.adjacency
    assert dual.nodes == direct.nodes


def test_graph_missing_face():
    model = BrepModel(faces=[unit_face(0)], edges=[unit_edge(0, (0, 2))])
    with pytest.raises(IntegrityError):
        build_face_graph(model)
    with pytest.raises(IntegrityError):
        build_edge_graph(model)


# -----------------------------------------------------------------------------
# Planarity
# -----------------------------------------------------------------------------
def test_planarity(solids):
    assert face_planarity_labels(solids["box"]).tolist() == [1] * 6
    assert face_planarity_labels(solids["cylinder"]).tolist() == [0, 1, 1]
    assert face_planarity_labels(solids["trimmed_plate"]).tolist() == [1] * 6 + [0]
    assert is_planar(plane((0, 0, 0), (2, 0, 1), (0, 3, 0), (2, 3, 1)))
    assert not is_planar(plane((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 1)))


# -----------------------------------------------------------------------------
# Generators
# -----------------------------------------------------------------------------
def test_generate_params():
    box = generate_solid("box", {"sx": 2.0, "sy": 3.0, "sz": 4.0})
    corner = eval_surface(box.face(1).surface, 1.0, 1.0)
    assert np.allclose(corner, [2, 3, 4])


@pytest.mark.parametrize(
    "kind, params",
    [
        ("sphere", None),
        ("box", {"sx": -1.0}),
        ("box", {"radius": 1.0}),
        ("cylinder", {"height": 0.0}),
        ("trimmed_plate", {"size": 1.0, "hole": 0.6}),
    ],
)
def test_generate_errors(kind, params):
    with pytest.raises(ArgumentError):
        generate_solid(kind, params)


def test_generate_dataset():
    def net(model):
        return model.face(0).surface.control_net

    models = generate_dataset(count=7, seed=3)
    kinds = ["box", "cylinder", "trimmed_plate"]
    assert [m.name for m in models] == kinds * 2 + ["box"]
    again = generate_dataset(count=7, seed=3)
    for a, b in zip(models, again):
        assert np.array_equal(net(a), net(b))
    other = generate_dataset(count=1, seed=4)[0]
    assert not np.array_equal(net(other), net(models[0]))
    with pytest.raises(ArgumentError):
        generate_dataset(count=0)


@pytest.mark.parametrize("kind", SOLID_KINDS)
def test_random_params_are_valid(kind):
    rng = np.random.default_rng(11)
    for _ in range(5):
        params = random_params(kind, rng)
        model = generate_solid(kind, params, seed=int(rng.integers(1000)))
        assert model.name == kind
