"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 9, 2026

Model level decomposition into standardized Bézier primitives.

"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, TypeVar

import numpy as np
from atom.api import Atom, Float, Int, List, Typed

from ..core.bezier import (
    BezierSegment,
    BezierTriangle,
    eval_bezier_segment,
    eval_bezier_triangle,
)
from ..core.errors import ArgumentError, IntegrityError
from ..core.geom import dehomogenize, eval_curve, eval_surface
from .boundary import BoundaryErrorReport
from .brep import BrepModel, Edge, Face
from .decompose import (
    curve_to_bezier_segments,
    elevate_segment_degree,
    elevate_triangle_degree,
    triangle_to_surface_params,
)
from .quadtree import TAU_RANGE, QuadCell, quadtree_decompose

log = logging.getLogger(__name__)

T = TypeVar("T")


class DecomposeSettings(Atom):
    """Parameters of the decomposition of a whole model."""

    #: Chord to arc threshold of boundary cells
    tau = Float(0.995).tag(config=True)

    #: Quadtree depth cap
    max_depth = Int(8).tag(config=True)

    #: Every segment is elevated to this degree (4 control points)
    curve_degree = Int(3).tag(config=True)

    #: Every triangle is elevated to this total degree (28 control points)
    triangle_degree = Int(6).tag(config=True)

    #: Entity level worker threads, the output does not depend on it
    workers = Int(1)

    def validate(self) -> DecomposeSettings:
        lo, hi = TAU_RANGE
        if not lo < self.tau < hi:
            raise ArgumentError(f"tau must be in ({lo}, {hi}), got {self.tau}")
        if self.max_depth < 1:
            raise ArgumentError(f"max_depth must be at least 1, got {self.max_depth}")
        if self.curve_degree < 1 or self.triangle_degree < 1:
            raise ArgumentError("Standardized degrees must be positive")
        if self.workers < 1:
            raise ArgumentError(f"workers must be positive, got {self.workers}")
        return self


class FacePrimitives(Atom):
    #: Face id
    entity = Int()

    #: Standardized triangles in quadtree traversal order
    triangles = List(Typed(BezierTriangle))

    #: Quadtree leaves
    cells = List(Typed(QuadCell))

    #: Trim boundary error, empty for untrimmed faces
    report = Typed(BoundaryErrorReport, factory=BoundaryErrorReport)


class EdgePrimitives(Atom):
    #: Edge id
    entity = Int()

    #: Standardized segments in curve order
    segments = List(Typed(BezierSegment))


class DecomposedModel(Atom):
    """The Bézier primitives of every entity of a model."""

    #: Per face primitives, ordered by face id
    faces = List(Typed(FacePrimitives))

    #: Per edge primitives, ordered by edge id
    edges = List(Typed(EdgePrimitives))

    #: Settings the primitives were produced with
    settings = Typed(DecomposeSettings, factory=DecomposeSettings)

    @property
    def n_triangles(self) -> int:
        return sum(len(f.triangles) for f in self.faces)

    @property
    def n_segments(self) -> int:
        return sum(len(e.segments) for e in self.edges)

    @property
    def unconverged(self) -> int:
        return sum(f.report.unconverged for f in self.faces)

    def control_points(self) -> np.ndarray:
        """Euclidean control points of every primitive, shape (n, 3)."""
        pts = [t.control_points for f in self.faces for t in f.triangles]
        pts += [s.control_points for e in self.edges for s in e.segments]
        if not pts:
            return np.zeros((0, 3))
        return dehomogenize(np.concatenate(pts))

    def check_matches(self, model: BrepModel):
        """Raise an `IntegrityError` unless these primitives come from `model`."""
        faces = [f.entity for f in self.faces]
        edges = [e.entity for e in self.edges]
        if faces != list(range(model.n_faces)) or edges != list(range(model.n_edges)):
            raise IntegrityError(
                f"Primitives cover faces {faces} and edges {edges} but the model has "
                f"{model.n_faces} face(s) and {model.n_edges} edge(s)"
            )
        for f in self.faces:
            if any(t.entity != f.entity for t in f.triangles):
                raise IntegrityError(f"Triangles of face {f.entity} name another face")
        for e in self.edges:
            if any(s.entity != e.entity for s in e.segments):
                raise IntegrityError(f"Segments of edge {e.entity} name another edge")

    def check_standardized(self):
        """Raise an `IntegrityError` unless all primitives share the target degrees."""
        s = self.settings
        for f in self.faces:
            for t in f.triangles:
                if t.degree != s.triangle_degree:
                    raise IntegrityError(
                        f"Face {f.entity} holds a degree {t.degree} triangle, "
                        f"expected {s.triangle_degree}"
                    )
        for e in self.edges:
            for seg in e.segments:
                if seg.degree != s.curve_degree:
                    raise IntegrityError(
                        f"Edge {e.entity} holds a degree {seg.degree} segment, "
                        f"expected {s.curve_degree}"
                    )


def standardize_segments(
    segments: Sequence[BezierSegment], degree: int
) -> list[BezierSegment]:
    for seg in segments:
        if seg.degree > degree:
            raise ArgumentError(
                f"Edge {seg.entity} has degree {seg.degree}, "
                f"above the supported {degree}"
            )
    return [elevate_segment_degree(seg, degree) for seg in segments]


def standardize_triangles(
    triangles: Sequence[BezierTriangle], degree: int
) -> list[BezierTriangle]:
    for tri in triangles:
        if tri.degree > degree:
            raise ArgumentError(
                f"Face {tri.entity} gives triangles of degree {tri.degree}, "
                f"above the supported {degree}"
            )
    return [elevate_triangle_degree(tri, degree) for tri in triangles]


def decompose_face(face: Face, settings: DecomposeSettings) -> FacePrimitives:
    triangles, cells, report = quadtree_decompose(
        face.surface, settings.tau, settings.max_depth, entity=face.id
    )
    return FacePrimitives(
        entity=face.id,
        triangles=standardize_triangles(triangles, settings.triangle_degree),
        cells=cells,
        report=report,
    )


def decompose_edge(edge: Edge, settings: DecomposeSettings) -> EdgePrimitives:
    segments = curve_to_bezier_segments(edge.curve, entity=edge.id)
    return EdgePrimitives(
        entity=edge.id, segments=standardize_segments(segments, settings.curve_degree)
    )


def decompose_model(
    model: BrepModel, settings: Optional[DecomposeSettings] = None
) -> DecomposedModel:
    """Decompose every face and edge of a model.

    Entities are independent so they may be dispatched to `settings.workers`
    threads; results keep id order.

    """
    settings = (settings or DecomposeSettings()).validate()
    faces = sorted(model.faces, key=lambda f: f.id)
    edges = sorted(model.edges, key=lambda e: e.id)
    if settings.workers > 1:
        with ThreadPoolExecutor(settings.workers) as pool:
            face_prims = list(pool.map(lambda f: decompose_face(f, settings), faces))
            edge_prims = list(pool.map(lambda e: decompose_edge(e, settings), edges))
    else:
        face_prims = [decompose_face(f, settings) for f in faces]
        edge_prims = [decompose_edge(e, settings) for e in edges]
    result = DecomposedModel(faces=face_prims, edges=edge_prims, settings=settings)
    log.debug(
        "Decomposed %s: %s triangle(s), %s segment(s)",
        model.name or "model",
        result.n_triangles,
        result.n_segments,
    )
    return result


# -----------------------------------------------------------------------------
# Primitive ranking
# -----------------------------------------------------------------------------
def triangle_area(tri: BezierTriangle) -> float:
    """Area of the triangle spanned by the three corner control points."""
    d = tri.degree
    a, b, c = tri.corner(0, 0), tri.corner(d, 0), tri.corner(0, d)
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


def segment_length(seg: BezierSegment) -> float:
    """Length of the control polygon."""
    pts = dehomogenize(seg.control_points)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def rank_primitives(
    items: Sequence[T], sizes: Sequence[float], cap: int, what: str = ""
) -> list[T]:
    """Keep at most `cap` items, largest first, ties by original index."""
    order = sorted(range(len(items)), key=lambda k: (-sizes[k], k))
    if len(order) > cap:
        log.warning("%s: %s primitive(s) exceed the cap of %s", what, len(order), cap)
    return [items[k] for k in order[:cap]]


def select_triangles(face: FacePrimitives, cap: int) -> list[BezierTriangle]:
    tris = face.triangles
    areas = [triangle_area(t) for t in tris]
    return rank_primitives(tris, areas, cap, f"Face {face.entity}")


def select_segments(edge: EdgePrimitives, cap: int) -> list[BezierSegment]:
    segs = edge.segments
    lengths = [segment_length(s) for s in segs]
    return rank_primitives(segs, lengths, cap, f"Edge {edge.entity}")


# -----------------------------------------------------------------------------
# Fidelity
# -----------------------------------------------------------------------------
def max_residual(
    model: BrepModel, decomposed: DecomposedModel, samples: int = 16, seed: int = 0
) -> float:
    """Largest distance between primitives and their source entities.

    Triangles are compared against the untrimmed source surface at mapped
    parameters, segments against the source curve.

    """
    decomposed.check_matches(model)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for fp in decomposed.faces:
        surface = model.face(fp.entity).surface
        for tri in fp.triangles:
            a, b = rng.random(samples), rng.random(samples)
            fold = a + b > 1
            a[fold], b[fold] = 1 - a[fold], 1 - b[fold]
            u, v = triangle_to_surface_params(tri, a, b)
            diff = eval_bezier_triangle(tri, a, b) - eval_surface(surface, u, v)
            worst = max(worst, float(np.max(np.linalg.norm(diff, axis=-1))))
    for ep in decomposed.edges:
        curve = model.edge(ep.entity).curve
        for seg in ep.segments:
            t = rng.random(samples)
            t0, t1 = seg.span
            diff = eval_bezier_segment(seg, t) - eval_curve(curve, t0 + t * (t1 - t0))
            worst = max(worst, float(np.max(np.linalg.norm(diff, axis=-1))))
    return worst
