"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 10, 2026

Shape representation: points sampled per primitive, padded per entity.

"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from atom.api import Atom, Float, Int, Typed

from ..core.bezier import eval_bezier_segment, eval_bezier_triangle
from ..core.errors import ArgumentError, IntegrityError
from .brep import BrepModel
from .primitives import DecomposedModel, select_segments, select_triangles

log = logging.getLogger(__name__)

#: Plastic number, generator of the R2 lattice
PLASTIC = 1.32471795724474602596

#: Default primitive caps per face and per edge
DEFAULT_CAPS = (32, 8)


class Frame(Atom):
    """Maps model coordinates into the unit cube centered at the origin."""

    #: Bounding box center
    center = Typed(np.ndarray, factory=lambda: np.zeros(3))

    #: One over the largest bounding box extent
    scale = Float(1.0)

    @classmethod
    def identity(cls) -> Frame:
        return cls()

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.center) * self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) / self.scale + self.center


def model_frame(decomposed: DecomposedModel) -> Frame:
    """Frame of the bounding box of all primitive control points."""
    pts = decomposed.control_points()
    if not len(pts):
        return Frame.identity()
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = float(np.max(hi - lo))
    return Frame(center=0.5 * (lo + hi), scale=1.0 / extent if extent > 0 else 1.0)


@lru_cache(16)
def curve_params(m: int) -> np.ndarray:
    """m uniform parameters on [0, 1], the midpoint when m == 1."""
    if m < 1:
        raise ArgumentError(f"Points per primitive must be positive, got {m}")
    t = np.array([0.5]) if m == 1 else np.linspace(0.0, 1.0, m)
    t.setflags(write=False)
    return t


@lru_cache(16)
def triangle_lattice(m: int) -> tuple[np.ndarray, np.ndarray]:
    """m deterministic low discrepancy points inside the unit triangle.

    The R2 sequence on the unit square with points beyond the diagonal
    reflected back through (0.5, 0.5).

    """
    if m < 1:
        raise ArgumentError(f"Points per primitive must be positive, got {m}")
    n = np.arange(1, m + 1)
    a = (0.5 + n / PLASTIC) % 1.0
    b = (0.5 + n / PLASTIC**2) % 1.0
    fold = a + b > 1.0
    a[fold], b[fold] = 1.0 - a[fold], 1.0 - b[fold]
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


class ShapeTargets(Atom):
    """Padded point targets of every entity with their validity masks."""

    #: Face points, shape (N_f, face_cap * m, 3)
    face_points = Typed(np.ndarray)

    #: Valid face slots, shape (N_f, face_cap * m)
    face_mask = Typed(np.ndarray)

    #: Edge points, shape (N_e, edge_cap * m, 3)
    edge_points = Typed(np.ndarray)

    #: Valid edge slots, shape (N_e, edge_cap * m)
    edge_mask = Typed(np.ndarray)

    #: Points per primitive
    m = Int(3)

    #: Primitive caps the slots were sized with
    face_cap = Int(DEFAULT_CAPS[0])
    edge_cap = Int(DEFAULT_CAPS[1])

    #: Normalization frame of every model in the targets, shape (M, 3) and (M,)
    centers = Typed(np.ndarray, factory=lambda: np.zeros((1, 3)))
    scales = Typed(np.ndarray, factory=lambda: np.ones(1))

    @property
    def n_faces(self) -> int:
        return len(self.face_points)

    @property
    def n_edges(self) -> int:
        return len(self.edge_points)


def sample_entity_points(
    model: BrepModel,
    decomposed: DecomposedModel,
    m: int = 3,
    caps: Sequence[int] = DEFAULT_CAPS,
    frame: Optional[Frame] = None,
) -> ShapeTargets:
    """Sample m points per primitive in the shared normalization frame.

    Parameters
    ----------
    model: BrepModel
        The model the primitives were decomposed from.
    decomposed: DecomposedModel
        Its primitives.
    m: int
        Points per primitive.
    caps: (int, int)
        Primitive caps per face and per edge; entity slots are cap * m.
    frame: Frame
        Coordinate frame, defaults to `model_frame(decomposed)`.

    """
    decomposed.check_matches(model)
    face_cap, edge_cap = caps
    if face_cap < 1 or edge_cap < 1:
        raise ArgumentError(f"Primitive caps must be positive, got {tuple(caps)}")
    if frame is None:
        frame = model_frame(decomposed)
    t = curve_params(m)
    a, b = triangle_lattice(m)

    face_points = np.zeros((model.n_faces, face_cap * m, 3))
    face_mask = np.zeros((model.n_faces, face_cap * m), dtype=bool)
    for fp in decomposed.faces:
        for k, tri in enumerate(select_triangles(fp, face_cap)):
            rows = slice(k * m, (k + 1) * m)
            face_points[fp.entity, rows] = frame.apply(eval_bezier_triangle(tri, a, b))
            face_mask[fp.entity, rows] = True

    edge_points = np.zeros((model.n_edges, edge_cap * m, 3))
    edge_mask = np.zeros((model.n_edges, edge_cap * m), dtype=bool)
    for ep in decomposed.edges:
        for k, seg in enumerate(select_segments(ep, edge_cap)):
            rows = slice(k * m, (k + 1) * m)
            edge_points[ep.entity, rows] = frame.apply(eval_bezier_segment(seg, t))
            edge_mask[ep.entity, rows] = True

    return ShapeTargets(
        face_points=face_points,
        face_mask=face_mask,
        edge_points=edge_points,
        edge_mask=edge_mask,
        m=m,
        face_cap=face_cap,
        edge_cap=edge_cap,
        centers=frame.center[None, :].copy(),
        scales=np.array([frame.scale]),
    )


def merge_targets(targets: Sequence[ShapeTargets]) -> ShapeTargets:
    """Stack the targets of several models along the entity axis."""
    if not targets:
        raise ArgumentError("Nothing to merge")
    first = targets[0]
    shape = (first.m, first.face_cap, first.edge_cap)
    for tg in targets[1:]:
        if (tg.m, tg.face_cap, tg.edge_cap) != shape:
            raise IntegrityError(
                "Targets sampled with different m or caps cannot be merged"
            )
    return ShapeTargets(
        face_points=np.concatenate([tg.face_points for tg in targets]),
        face_mask=np.concatenate([tg.face_mask for tg in targets]),
        edge_points=np.concatenate([tg.edge_points for tg in targets]),
        edge_mask=np.concatenate([tg.edge_mask for tg in targets]),
        m=first.m,
        face_cap=first.face_cap,
        edge_cap=first.edge_cap,
        centers=np.concatenate([tg.centers for tg in targets]),
        scales=np.concatenate([tg.scales for tg in targets]),
    )
