"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 8, 2026

Synthetic solids with exact NURBS geometry.

"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..core.errors import ArgumentError
from ..core.geom import (
    CIRCLE_KNOTS,
    NurbsCurve,
    NurbsSurface,
    TrimLoop,
    as_homogeneous,
    circle_net,
    line,
    rational_circle,
)
from .brep import BrepModel, Edge, Face

LINEAR = (0.0, 0.0, 1.0, 1.0)


def _positive(**dims: float):
    for name, value in dims.items():
        if not value > 0:
            raise ArgumentError(f"Dimension '{name}' must be positive, got {value}")


def plane(p00, p10, p01, p11, trim_loops: Sequence[TrimLoop] = ()) -> NurbsSurface:
    """Bilinear patch through four corners, u along p00 -> p10."""
    pts = np.array([[p00, p01], [p10, p11]], dtype=float)
    return NurbsSurface.from_points(1, 1, LINEAR, LINEAR, pts, trim_loops=trim_loops)


def _model(kind: str, surfaces, edges) -> BrepModel:
    faces = [Face(id=i, surface=s) for i, s in enumerate(surfaces)]
    edges = [
        Edge(id=i, curve=c, bounds_faces=tuple(fs)) for i, (c, fs) in enumerate(edges)
    ]
    label = SOLID_KINDS.index(kind)
    return BrepModel(faces=faces, edges=edges, label=label, name=kind).validate()


def _box_shell(sx: float, sy: float, sz: float, top_loops=(), bottom_loops=()):
    """Faces x0, x1, y0, y1, z0, z1 and the twelve edges of a cuboid."""
    v = np.zeros((2, 2, 2, 3))
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                v[i, j, k] = (i * sx, j * sy, k * sz)
    surfaces = []
    for i in (0, 1):
        surfaces.append(plane(v[i, 0, 0], v[i, 1, 0], v[i, 0, 1], v[i, 1, 1]))
    for j in (0, 1):
        surfaces.append(plane(v[0, j, 0], v[1, j, 0], v[0, j, 1], v[1, j, 1]))
    surfaces.append(plane(v[0, 0, 0], v[1, 0, 0], v[0, 1, 0], v[1, 1, 0], bottom_loops))
    surfaces.append(plane(v[0, 0, 1], v[1, 0, 1], v[0, 1, 1], v[1, 1, 1], top_loops))
    edges = []
    for j in (0, 1):
        for k in (0, 1):
            edges.append((line(v[0, j, k], v[1, j, k]), (2 + j, 4 + k)))
    for i in (0, 1):
        for k in (0, 1):
            edges.append((line(v[i, 0, k], v[i, 1, k]), (i, 4 + k)))
    for i in (0, 1):
        for j in (0, 1):
            edges.append((line(v[i, j, 0], v[i, j, 1]), (i, 2 + j)))
    return surfaces, edges


def box(sx: float = 1.0, sy: float = 1.0, sz: float = 1.0, rng=None) -> BrepModel:
    _positive(sx=sx, sy=sy, sz=sz)
    return _model("box", *_box_shell(sx, sy, sz))


def _wall(center, radius: float, z0: float, z1: float) -> NurbsSurface:
    """Cylindrical wall, u around the axis and v along it."""
    cx, cy = center
    bottom = circle_net((cx, cy, z0), radius)
    top = circle_net((cx, cy, z1), radius)
    return NurbsSurface(2, 1, CIRCLE_KNOTS, LINEAR, np.stack([bottom, top], axis=1))


def _disk(center, radius: float, z: float) -> NurbsSurface:
    """Rational disk, degenerate at v = 0 where the net collapses to the center."""
    cx, cy = center
    rim = circle_net((cx, cy, z), radius)
    weights = rim[:, 3]
    hub = as_homogeneous(np.tile([cx, cy, z], (9, 1)), weights)
    return NurbsSurface(2, 1, CIRCLE_KNOTS, LINEAR, np.stack([hub, rim], axis=1))


def cylinder(radius: float = 1.0, height: float = 2.0, rng=None) -> BrepModel:
    """Wall (0), bottom cap (1) and top cap (2); rims plus a wall seam."""
    _positive(radius=radius, height=height)
    surfaces = [
        _wall((0, 0), radius, 0.0, height),
        _disk((0, 0), radius, 0.0),
        _disk((0, 0), radius, height),
    ]
    edges = [
        (rational_circle((0, 0, 0), radius), (0, 1)),
        (rational_circle((0, 0, height), radius), (0, 2)),
        (line((radius, 0, 0), (radius, 0, height)), (0, 0)),
    ]
    return _model("cylinder", surfaces, edges)


def trimmed_plate(
    size: float = 1.0, thickness: float = 0.2, hole: float = 0.25, rng=None
) -> BrepModel:
    """A square plate with a round through hole.

    Top and bottom faces are planes trimmed by a circular pcurve; the hole
    wall is face 6.

    """
    _positive(size=size, thickness=thickness, hole=hole)
    if not hole < size / 2:
        raise ArgumentError(f"Hole radius {hole} does not fit a plate of size {size}")
    r = hole / size
    circle = rational_circle((0.5, 0.5), r, clockwise=True)
    loops = [TrimLoop(pcurves=[circle], orientation="inner")]
    surfaces, edges = _box_shell(
        size, size, thickness, top_loops=loops, bottom_loops=loops
    )
    c = (size / 2, size / 2)
    surfaces.append(_wall(c, hole, 0.0, thickness))
    edges.append((rational_circle((c[0], c[1], 0.0), hole), (4, 6)))
    edges.append((rational_circle((c[0], c[1], thickness), hole), (5, 6)))
    seam = line((c[0] + hole, c[1], 0.0), (c[0] + hole, c[1], thickness))
    edges.append((seam, (6, 6)))
    return _model("trimmed_plate", surfaces, edges)


def wedge_profile(
    length: float, height: float, rng: Optional[np.random.Generator]
) -> NurbsCurve:
    """Rational cubic from (0, height) to (length, 0) in the xz plane."""
    s = np.linspace(0.0, 1.0, 5)
    z = height * (1.0 - s) ** 1.5
    w = np.ones(5)
    if rng is not None:
        z[1:-1] = np.clip(z[1:-1] + rng.uniform(-0.1, 0.1, 3) * height, 0.0, height)
        w[1:-1] = rng.uniform(0.7, 1.4, 3)
    pts = np.stack([s * length, np.zeros(5), z], axis=1)
    return NurbsCurve.from_points(3, (0, 0, 0, 0, 0.5, 1, 1, 1, 1), pts, w)


def lofted_wedge(
    length: float = 1.0, height: float = 0.6, depth: float = 0.8, rng=None
) -> BrepModel:
    """A prism under a curved slope.

    Faces: bottom (0), back (1), slope (2), sides at y = 0 (3) and y = depth
    (4). Each side is ruled between the slope profile and the bottom back
    corner.

    """
    _positive(length=length, height=height, depth=depth)
    profile = wedge_profile(length, height, rng)
    shift = np.array([0.0, depth, 0.0, 0.0])
    front = profile.control_points
    back = front + shift * front[:, 3:4]
    knots = profile.knots
    slope = NurbsSurface(3, 1, knots, LINEAR, np.stack([front, back], axis=1))

    def side(net: np.ndarray, y: float) -> NurbsSurface:
        corner = as_homogeneous(np.tile([0.0, y, 0.0], (len(net), 1)), net[:, 3])
        return NurbsSurface(3, 1, knots, LINEAR, np.stack([corner, net], axis=1))

    o, L, H, D = 0.0, length, height, depth
    surfaces = [
        plane((o, o, o), (L, o, o), (o, D, o), (L, D, o)),
        plane((o, o, o), (o, D, o), (o, o, H), (o, D, H)),
        slope,
        side(front, 0.0),
        side(back, depth),
    ]
    edges = [
        (profile, (2, 3)),
        (NurbsCurve(3, knots, back), (2, 4)),
        (line((o, o, o), (L, o, o)), (0, 3)),
        (line((o, D, o), (L, D, o)), (0, 4)),
        (line((o, o, o), (o, o, H)), (1, 3)),
        (line((o, D, o), (o, D, H)), (1, 4)),
        (line((o, o, o), (o, D, o)), (0, 1)),
        (line((o, o, H), (o, D, H)), (1, 2)),
        (line((L, o, o), (L, D, o)), (0, 2)),
    ]
    return _model("lofted_wedge", surfaces, edges)


def hinge(width: float = 1.0, angle: float = 2.0, rng=None) -> BrepModel:
    """Two unit square flaps sharing edge 0, opened by `angle` radians."""
    _positive(width=width, angle=angle)
    w = width
    tip = np.array([w - w * np.cos(angle), 0.0, w * np.sin(angle)])
    a = [(0, 0, 0), (w, 0, 0), (0, w, 0), (w, w, 0)]
    b = [(w, 0, 0), tuple(tip), (w, w, 0), tuple(tip + (0, w, 0))]
    surfaces = [plane(*a), plane(*b)]
    edges = [
        (line(a[1], a[3]), (0, 1)),
        (line(a[0], a[1]), (0,)),
        (line(a[0], a[2]), (0,)),
        (line(a[2], a[3]), (0,)),
        (line(b[0], b[1]), (1,)),
        (line(b[1], b[3]), (1,)),
        (line(b[2], b[3]), (1,)),
    ]
    return _model("hinge", surfaces, edges)


#: Generator per solid kind, the index is the model label
SOLIDS: dict[str, Callable[..., BrepModel]] = {
    "box": box,
    "cylinder": cylinder,
    "trimmed_plate": trimmed_plate,
    "lofted_wedge": lofted_wedge,
    "hinge": hinge,
}

SOLID_KINDS = tuple(SOLIDS)


def generate_solid(
    kind: str, params: Optional[dict] = None, seed: Optional[int] = None
) -> BrepModel:
    """Generate one synthetic solid.

    Parameters
    ----------
    kind: str
        One of `SOLID_KINDS`.
    params: dict
        Dimensions accepted by the generator of that kind.
    seed: int
        Seeds the random perturbations of kinds that have any.

    """
    factory = SOLIDS.get(kind)
    if factory is None:
        raise ArgumentError(
            f"Unknown solid kind '{kind}', expected one of {SOLID_KINDS}"
        )
    rng = None if seed is None else np.random.default_rng(seed)
    try:
        return factory(rng=rng, **(params or {}))
    except TypeError as e:
        raise ArgumentError(f"Invalid parameters for '{kind}': {e}") from e


def random_params(kind: str, rng: np.random.Generator) -> dict:
    """Dimensions drawn for dataset generation."""

    def u(lo: float, hi: float) -> float:
        return float(rng.uniform(lo, hi))

    if kind == "box":
        return {"sx": u(0.5, 2.0), "sy": u(0.5, 2.0), "sz": u(0.5, 2.0)}
    if kind == "cylinder":
        return {"radius": u(0.3, 1.0), "height": u(0.5, 2.0)}
    if kind == "trimmed_plate":
        size = u(1.0, 2.0)
        return {"size": size, "thickness": u(0.1, 0.4), "hole": u(0.15, 0.35) * size}
    if kind == "lofted_wedge":
        return {"length": u(0.8, 1.6), "height": u(0.3, 1.0), "depth": u(0.5, 1.5)}
    return {"width": u(0.5, 1.5), "angle": u(0.8, 2.6)}


def generate_dataset(
    kinds: Sequence[str] = ("box", "cylinder", "trimmed_plate"),
    count: int = 32,
    seed: int = 0,
) -> list[BrepModel]:
    """`count` solids cycling through `kinds` with seeded dimensions."""
    if count < 1:
        raise ArgumentError(f"Dataset size must be positive, got {count}")
    rng = np.random.default_rng(seed)
    models = []
    for n in range(count):
        kind = kinds[n % len(kinds)]
        params = random_params(kind, rng)
        models.append(generate_solid(kind, params, seed=int(rng.integers(2**31))))
    return models
