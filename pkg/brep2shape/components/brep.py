"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 8, 2026
"""

from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import Iterable, Optional

import numpy as np
from atom.api import Atom, Dict, Int, List, Str, Tuple, Typed

from ..core.errors import IntegrityError
from ..core.geom import NurbsCurve, NurbsSurface


class Face(Atom):
    #: Dense id of the face
    id = Int()

    #: Face geometry with its trim loops
    surface = Typed(NurbsSurface)


class Edge(Atom):
    #: Dense id of the edge
    id = Int()

    #: Edge geometry in model space
    curve = Typed(NurbsCurve)

    #: Ids of the faces this edge bounds, a seam lists its face twice
    bounds_faces = Tuple(int)


class BrepModel(Atom):
    """A boundary representation: faces, edges and their incidence."""

    #: Faces, ordered by id once validated
    faces = List(Typed(Face))

    #: Edges, ordered by id once validated
    edges = List(Typed(Edge))

    #: Class id for classification tasks, -1 when unlabeled
    label = Int(-1)

    #: Generator kind or file stem
    name = Str()

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def face(self, fid: int) -> Face:
        return self._face_index()[fid]

    def edge(self, eid: int) -> Edge:
        return self._edge_index()[eid]

    def _face_index(self) -> dict[int, Face]:
        return {f.id: f for f in self.faces}

    def _edge_index(self) -> dict[int, Edge]:
        return {e.id: e for e in self.edges}

    def incidence(self) -> dict[int, tuple[int, ...]]:
        return {e.id: e.bounds_faces for e in self.edges}

    @property
    def is_closed(self) -> bool:
        """Whether every edge bounds exactly two face sides."""
        return all(len(e.bounds_faces) == 2 for e in self.edges)

    def validate(self) -> BrepModel:
        """Check ids and incidence, raising an `IntegrityError`."""
        if not self.faces or not self.edges:
            raise IntegrityError(
                f"A model needs at least one face and one edge, got "
                f"{len(self.faces)} face(s) and {len(self.edges)} edge(s)"
            )
        for kind, items in (("face", self.faces), ("edge", self.edges)):
            ids = sorted(item.id for item in items)
            if ids != list(range(len(items))):
                raise IntegrityError(f"The {kind} ids are not dense and unique: {ids}")
        faces = {f.id for f in self.faces}
        referenced = set()
        for e in self.edges:
            if not e.bounds_faces:
                raise IntegrityError(f"Edge {e.id} does not bound any face")
            missing = [f for f in e.bounds_faces if f not in faces]
            if missing:
                raise IntegrityError(
                    f"Edge {e.id} references missing face(s) {missing}"
                )
            referenced.update(e.bounds_faces)
        lonely = sorted(faces - referenced)
        if lonely:
            raise IntegrityError(f"Face(s) {lonely} are not bounded by any edge")
        for f in self.faces:
            for loop in f.surface.trim_loops:
                loop.check_closed()
        return self

    def permuted(
        self, face_order: Iterable[int], edge_order: Optional[Iterable[int]] = None
    ) -> BrepModel:
        """Relabel entities; face_order[k] is the old id of new face k."""
        face_order = list(face_order)
        if edge_order is None:
            edge_order = range(self.n_edges)
        edge_order = list(edge_order)
        new_face = {old: new for new, old in enumerate(face_order)}
        faces = [
            Face(id=new, surface=self.face(old).surface)
            for new, old in enumerate(face_order)
        ]
        edges = [
            Edge(
                id=new,
                curve=self.edge(old).curve,
                bounds_faces=tuple(new_face[f] for f in self.edge(old).bounds_faces),
            )
            for new, old in enumerate(edge_order)
        ]
        return BrepModel(faces=faces, edges=edges, label=self.label, name=self.name)


class EntityGraph(Atom):
    """Undirected graph with labeled adjacency.

    Every unordered pair (a, b), a < b, maps to the sorted ids of the
    complementary entities they share.

    """

    #: Node ids
    nodes = Tuple(int)

    #: (a, b) -> shared complementary ids
    adjacency = Dict()

    def shared(self, a: int, b: int) -> tuple[int, ...]:
        key = (a, b) if a < b else (b, a)
        return self.adjacency.get(key, ())

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self.shared(a, b))

    def neighbors(self, a: int) -> list[int]:
        result = []
        for x, y in self.adjacency:
            if x == a:
                result.append(y)
            elif y == a:
                result.append(x)
        return sorted(result)

    def triples(self) -> list[tuple[int, int, int]]:
        """(a, b, shared) per pair and shared entity, sorted."""
        return sorted(
            (a, b, s) for (a, b), shared in self.adjacency.items() for s in shared
        )

    def __len__(self) -> int:
        return len(self.adjacency)


class FaceGraph(EntityGraph):
    """Faces linked by the edges they share."""


class EdgeGraph(EntityGraph):
    """Edges linked by the faces they share, the dual of the face graph."""


def _freeze(pairs: dict) -> dict:
    return {key: tuple(sorted(set(value))) for key, value in sorted(pairs.items())}


def _check_references(model: BrepModel):
    faces = {f.id for f in model.faces}
    for e in model.edges:
        missing = [f for f in e.bounds_faces if f not in faces]
        if missing:
            raise IntegrityError(f"Edge {e.id} references missing face(s) {missing}")


def build_face_graph(model: BrepModel) -> FaceGraph:
    """Faces are adjacent iff they share an edge; self adjacency is ignored."""
    _check_references(model)
    pairs = defaultdict(list)
    for e in model.edges:
        for a, b in combinations(sorted(set(e.bounds_faces)), 2):
            pairs[(a, b)].append(e.id)
    nodes = tuple(sorted(f.id for f in model.faces))
    return FaceGraph(nodes=nodes, adjacency=_freeze(pairs))


def _edge_nodes(model: BrepModel) -> tuple[int, ...]:
    return tuple(sorted(e.id for e in model.edges))


def _edges_by_face(model: BrepModel) -> dict[int, set[int]]:
    on_face = defaultdict(set)
    for e in model.edges:
        for f in e.bounds_faces:
            on_face[f].add(e.id)
    return on_face


def _edge_pairs(on_face: dict[int, set[int]]) -> dict:
    pairs = defaultdict(list)
    for f, edges in on_face.items():
        for a, b in combinations(sorted(edges), 2):
            pairs[(a, b)].append(f)
    return pairs


def build_edge_graph(model: BrepModel) -> EdgeGraph:
    """Edges are adjacent iff they bound a common face."""
    _check_references(model)
    pairs = _edge_pairs(_edges_by_face(model))
    return EdgeGraph(nodes=_edge_nodes(model), adjacency=_freeze(pairs))


def edge_graph_from_face_graph(face_graph: FaceGraph, model: BrepModel) -> EdgeGraph:
    """The dual construction of the edge graph.

    The edges of a face are the shared edges of its face graph entries, plus
    the edges incidence gives to that face alone (open boundaries and seams).

    """
    on_face = defaultdict(set)
    for (a, b), shared in face_graph.adjacency.items():
        on_face[a].update(shared)
        on_face[b].update(shared)
    for e in model.edges:
        distinct = set(e.bounds_faces)
        if len(distinct) == 1:
            on_face[next(iter(distinct))].add(e.id)
    pairs = _edge_pairs(on_face)
    return EdgeGraph(nodes=_edge_nodes(model), adjacency=_freeze(pairs))


def is_planar(surface: NurbsSurface, tol: float = 1e-9) -> bool:
    """Whether all control points lie in one plane."""
    pts = surface.points.reshape(-1, 3)
    centered = pts - pts.mean(axis=0)
    scale = max(float(np.max(np.abs(centered))), 1.0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return bool(sv[-1] <= tol * scale)


def face_planarity_labels(model: BrepModel) -> np.ndarray:
    """1 for planar faces and 0 for curved ones, in face id order."""
    faces = sorted(model.faces, key=lambda f: f.id)
    return np.array([int(is_planar(f.surface)) for f in faces], dtype=np.int64)
