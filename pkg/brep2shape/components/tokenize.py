"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 11, 2026

Fixed shape control point tensors and adjacency payloads.

"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from atom.api import Atom, Int, Typed

from ..core.bezier import BezierSegment, BezierTriangle
from ..core.errors import ArgumentError, IntegrityError
from ..core.geom import as_homogeneous, dehomogenize
from .brep import BrepModel, build_edge_graph, build_face_graph
from .primitives import DecomposedModel, select_segments, select_triangles
from .sampling import DEFAULT_CAPS, Frame, model_frame


def _empty_triples() -> np.ndarray:
    return np.zeros((0, 3), dtype=np.int64)


class TokenBatch(Atom):
    """Padded primitive tensors of one or more models.

    Control points are stored as (x, y, z, w): normalized euclidean
    coordinates plus the raw weight.

    """

    #: Shape (N_f, face_cap, (d+1)(d+2)/2, 4)
    face_tensor = Typed(np.ndarray)

    #: Valid primitive slots, shape (N_f, face_cap)
    face_mask = Typed(np.ndarray)

    #: Shape (N_e, edge_cap, p + 1, 4)
    edge_tensor = Typed(np.ndarray)

    #: Valid primitive slots, shape (N_e, edge_cap)
    edge_mask = Typed(np.ndarray)

    #: Face pairs (a, b, shared edge) with a < b, shape (K, 3)
    face_adjacency = Typed(np.ndarray, factory=_empty_triples)

    #: Edge pairs (a, b, shared face) with a < b, shape (K, 3)
    edge_adjacency = Typed(np.ndarray, factory=_empty_triples)

    #: Per model (N_f, N_e), shape (M, 2)
    counts = Typed(np.ndarray)

    #: Per model normalization frames, shape (M, 3) and (M,)
    centers = Typed(np.ndarray)
    scales = Typed(np.ndarray)

    #: Standardized degrees
    triangle_degree = Int(6)
    curve_degree = Int(3)

    @property
    def n_models(self) -> int:
        return len(self.counts)

    @property
    def n_faces(self) -> int:
        return len(self.face_tensor)

    @property
    def n_edges(self) -> int:
        return len(self.edge_tensor)

    @property
    def face_cap(self) -> int:
        return self.face_tensor.shape[1]

    @property
    def edge_cap(self) -> int:
        return self.edge_tensor.shape[1]

    @property
    def face_model(self) -> np.ndarray:
        """Model index of every face."""
        return np.repeat(np.arange(self.n_models), self.counts[:, 0])

    @property
    def edge_model(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_models), self.counts[:, 1])

    def validate(self) -> TokenBatch:
        """Check shapes and adjacency ranges, raising an `IntegrityError`."""
        nf, ne = self.n_faces, self.n_edges
        if self.face_mask.shape != self.face_tensor.shape[:2]:
            raise IntegrityError("Face mask does not match the face tensor")
        if self.edge_mask.shape != self.edge_tensor.shape[:2]:
            raise IntegrityError("Edge mask does not match the edge tensor")
        if self.face_tensor.shape[-1] != 4 or self.edge_tensor.shape[-1] != 4:
            raise IntegrityError("Control points must have 4 components")
        if self.counts.sum(axis=0).tolist() != [nf, ne]:
            raise IntegrityError("Model counts do not add up to the entity counts")
        for name, adj, n, m in (
            ("face", self.face_adjacency, nf, ne),
            ("edge", self.edge_adjacency, ne, nf),
        ):
            if adj.ndim != 2 or adj.shape[1] != 3:
                raise IntegrityError(f"The {name} adjacency must be a (K, 3) array")
            if len(adj) and (
                adj[:, :2].min() < 0
                or adj[:, :2].max() >= n
                or adj[:, 2].min() < 0
                or adj[:, 2].max() >= m
            ):
                raise IntegrityError(f"The {name} adjacency holds indices out of range")
        return self


def _tokens(pw: np.ndarray, frame: Frame) -> np.ndarray:
    """Homogeneous points to normalized (x, y, z) plus the raw weight."""
    return np.concatenate([frame.apply(dehomogenize(pw)), pw[:, 3:]], axis=1)


def _triples(graph) -> np.ndarray:
    return np.array(graph.triples(), dtype=np.int64).reshape(-1, 3)


def tokenize_model(
    model: BrepModel,
    decomposed: DecomposedModel,
    caps: Sequence[int] = DEFAULT_CAPS,
    frame: Optional[Frame] = None,
) -> TokenBatch:
    """Tensors and adjacency of one model.

    Parameters
    ----------
    model: BrepModel
        The source model, used for its graphs.
    decomposed: DecomposedModel
        Its standardized primitives.
    caps: (int, int)
        Primitives kept per face and per edge, largest first.
    frame: Frame
        Coordinate frame, defaults to `model_frame(decomposed)`.

    """
    decomposed.check_matches(model)
    decomposed.check_standardized()
    face_cap, edge_cap = caps
    if face_cap < 1 or edge_cap < 1:
        raise ArgumentError(f"Primitive caps must be positive, got {tuple(caps)}")
    if frame is None:
        frame = model_frame(decomposed)
    d = decomposed.settings.triangle_degree
    p = decomposed.settings.curve_degree

    faces = np.zeros((model.n_faces, face_cap, (d + 1) * (d + 2) // 2, 4))
    face_mask = np.zeros((model.n_faces, face_cap), dtype=bool)
    for fp in decomposed.faces:
        for k, tri in enumerate(select_triangles(fp, face_cap)):
            faces[fp.entity, k] = _tokens(tri.control_points, frame)
            face_mask[fp.entity, k] = True

    edges = np.zeros((model.n_edges, edge_cap, p + 1, 4))
    edge_mask = np.zeros((model.n_edges, edge_cap), dtype=bool)
    for ep in decomposed.edges:
        for k, seg in enumerate(select_segments(ep, edge_cap)):
            edges[ep.entity, k] = _tokens(seg.control_points, frame)
            edge_mask[ep.entity, k] = True

    face_adj = _triples(build_face_graph(model))
    edge_adj = _triples(build_edge_graph(model))
    return TokenBatch(
        face_tensor=faces,
        face_mask=face_mask,
        edge_tensor=edges,
        edge_mask=edge_mask,
        face_adjacency=face_adj,
        edge_adjacency=edge_adj,
        counts=np.array([[model.n_faces, model.n_edges]], dtype=np.int64),
        centers=frame.center[None, :].copy(),
        scales=np.array([frame.scale]),
        triangle_degree=d,
        curve_degree=p,
    ).validate()


def merge_batches(batches: Sequence[TokenBatch]) -> TokenBatch:
    """Concatenate batches; adjacency indices are offset, never crossing models."""
    if not batches:
        raise ArgumentError("Nothing to merge")
    first = batches[0]
    for b in batches[1:]:
        if b.face_tensor.shape[1:] != first.face_tensor.shape[1:] or (
            b.edge_tensor.shape[1:] != first.edge_tensor.shape[1:]
        ):
            raise IntegrityError(
                "Batches with different caps or degrees cannot be merged"
            )
    face_adj, edge_adj = [], []
    nf = ne = 0
    for b in batches:
        face_adj.append(b.face_adjacency + np.array([nf, nf, ne]))
        edge_adj.append(b.edge_adjacency + np.array([ne, ne, nf]))
        nf += b.n_faces
        ne += b.n_edges
    return TokenBatch(
        face_tensor=np.concatenate([b.face_tensor for b in batches]),
        face_mask=np.concatenate([b.face_mask for b in batches]),
        edge_tensor=np.concatenate([b.edge_tensor for b in batches]),
        edge_mask=np.concatenate([b.edge_mask for b in batches]),
        face_adjacency=np.concatenate(face_adj).astype(np.int64),
        edge_adjacency=np.concatenate(edge_adj).astype(np.int64),
        counts=np.concatenate([b.counts for b in batches]),
        centers=np.concatenate([b.centers for b in batches]),
        scales=np.concatenate([b.scales for b in batches]),
        triangle_degree=first.triangle_degree,
        curve_degree=first.curve_degree,
    ).validate()


def tokenize_models(
    items: Sequence[tuple[BrepModel, DecomposedModel]],
    caps: Sequence[int] = DEFAULT_CAPS,
) -> TokenBatch:
    return merge_batches([tokenize_model(model, prims, caps) for model, prims in items])


def detokenize_face_primitive(
    batch: TokenBatch, face: int, slot: int
) -> BezierTriangle:
    """The normalized frame triangle stored in a slot."""
    if not batch.face_mask[face, slot]:
        raise IntegrityError(f"Slot {slot} of face {face} is padding")
    xyzw = batch.face_tensor[face, slot]
    return BezierTriangle(as_homogeneous(xyzw[:, :3], xyzw[:, 3]), entity=face)


def detokenize_edge_primitive(batch: TokenBatch, edge: int, slot: int) -> BezierSegment:
    if not batch.edge_mask[edge, slot]:
        raise IntegrityError(f"Slot {slot} of edge {edge} is padding")
    xyzw = batch.edge_tensor[edge, slot]
    return BezierSegment(as_homogeneous(xyzw[:, :3], xyzw[:, 3]), entity=edge)
