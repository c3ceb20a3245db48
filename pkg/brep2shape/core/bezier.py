"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 4, 2026
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np
from atom.api import Atom, Enum, Int, Tuple, Typed

from .errors import ArgumentError, DomainError
from .geom import EPS, ParamType, as_homogeneous, bernstein_basis, dehomogenize

#: Cell type, ((u0, u1), (v0, v1)) in the source surface parameters
Cell = tuple[tuple[float, float], tuple[float, float]]


def _check_weights(pw: np.ndarray):
    if np.any(~(pw[..., 3] > 0)):
        raise ArgumentError("Control point weights must be strictly positive")


class BezierSegment(Atom):
    """A Bézier curve on [0, 1] cut from a source curve."""

    #: Degree, the segment holds degree + 1 control points
    degree = Int()

    #: Homogeneous control points of shape (degree + 1, 4)
    control_points = Typed(np.ndarray)

    #: Id of the source edge (-1 when detached)
    entity = Int(-1)

    #: Parameter interval of the source curve this segment reproduces
    span = Tuple(float, default=(0.0, 1.0))

    def __init__(self, control_points: np.ndarray, entity: int = -1, span=(0.0, 1.0)):
        pw = np.array(control_points, dtype=float)
        if pw.ndim != 2 or pw.shape[1] != 4 or len(pw) < 2:
            raise ArgumentError(f"Invalid segment control points of shape {pw.shape}")
        _check_weights(pw)
        pw.setflags(write=False)
        super().__init__(
            degree=len(pw) - 1,
            control_points=pw,
            entity=entity,
            span=(float(span[0]), float(span[1])),
        )


class BezierRectangle(Atom):
    """A tensor-product Bézier patch on [0, 1]^2."""

    #: Degrees along u and v
    degree_u = Int()
    degree_v = Int()

    #: Homogeneous control net of shape (degree_u + 1, degree_v + 1, 4)
    control_net = Typed(np.ndarray)

    #: Id of the source face
    entity = Int(-1)

    #: Source parameter cell
    cell = Tuple(default=((0.0, 1.0), (0.0, 1.0)))

    def __init__(
        self,
        control_net: np.ndarray,
        entity: int = -1,
        cell: Cell = ((0.0, 1.0), (0.0, 1.0)),
    ):
        pw = np.array(control_net, dtype=float)
        if pw.ndim != 3 or pw.shape[2] != 4 or pw.shape[0] < 2 or pw.shape[1] < 2:
            raise ArgumentError(f"Invalid rectangle control net of shape {pw.shape}")
        _check_weights(pw)
        pw.setflags(write=False)
        (u0, u1), (v0, v1) = cell
        super().__init__(
            degree_u=pw.shape[0] - 1,
            degree_v=pw.shape[1] - 1,
            control_net=pw,
            entity=entity,
            cell=((float(u0), float(u1)), (float(v0), float(v1))),
        )


class BezierTriangle(Atom):
    """A triangular Bézier patch of total degree d over the unit triangle.

    Control points are ordered lexicographically by (i, j) with i + j <= d,
    see `triangle_indices`.

    """

    #: Total degree
    degree = Int()

    #: Homogeneous control points of shape ((d+1)(d+2)/2, 4)
    control_points = Typed(np.ndarray)

    #: Id of the source face
    entity = Int(-1)

    #: Source parameter cell of the rectangle this triangle was cut from
    cell = Tuple(default=((0.0, 1.0), (0.0, 1.0)))

    #: Which half of the cell, lower is u + v <= 1 of the cell's unit square
    half = Enum("lower", "upper")

    def __init__(
        self,
        control_points: np.ndarray,
        entity: int = -1,
        cell: Cell = ((0.0, 1.0), (0.0, 1.0)),
        half: str = "lower",
    ):
        pw = np.array(control_points, dtype=float)
        if pw.ndim != 2 or pw.shape[1] != 4:
            raise ArgumentError(f"Invalid triangle control points of shape {pw.shape}")
        d = triangle_degree(len(pw))
        _check_weights(pw)
        pw.setflags(write=False)
        (u0, u1), (v0, v1) = cell
        super().__init__(
            degree=d,
            control_points=pw,
            entity=entity,
            cell=((float(u0), float(u1)), (float(v0), float(v1))),
            half=half,
        )

    def corner(self, i: int, j: int) -> np.ndarray:
        """Euclidean control point V_ij."""
        return dehomogenize(self.control_points[triangle_index(self.degree, i, j)])


@lru_cache(64)
def triangle_indices(d: int) -> tuple[tuple[int, int], ...]:
    """The (i, j) pairs with i + j <= d in lexicographic order."""
    return tuple((i, j) for i in range(d + 1) for j in range(d + 1 - i))


def triangle_index(d: int, i: int, j: int) -> int:
    return triangle_indices(d).index((i, j))


def triangle_degree(count: int) -> int:
    """Invert (d+1)(d+2)/2, raising if count is not triangular."""
    d = 0
    while (d + 1) * (d + 2) // 2 < count:
        d += 1
    if (d + 1) * (d + 2) // 2 != count or d < 1:
        raise ArgumentError(f"{count} is not a valid triangle control point count")
    return d


@lru_cache(64)
def _multinomials(d: int) -> np.ndarray:
    return np.array(
        [
            factorial(d) / (factorial(i) * factorial(j) * factorial(d - i - j))
            for i, j in triangle_indices(d)
        ]
    )


def triangle_basis(d: int, u: ParamType, v: ParamType) -> np.ndarray:
    """Bivariate Bernstein values B^d_ij(u, v), shape (count, k)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    t = 1.0 - u - v
    ij = np.array(triangle_indices(d))
    i = ij[:, 0:1]
    j = ij[:, 1:2]
    monomials = u[None] ** i * v[None] ** j * t[None] ** (d - i - j)
    return _multinomials(d)[:, None] * monomials


def _unit_params(t: ParamType) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~np.isfinite(t)) or np.any(t < -EPS) or np.any(t > 1 + EPS):
        raise DomainError("Bézier parameter outside of [0, 1]")
    return np.clip(t, 0.0, 1.0)


def eval_bezier_segment(seg: BezierSegment, t: ParamType) -> np.ndarray:
    s = _unit_params(t)
    pw = bernstein_basis(seg.degree, s).T @ seg.control_points
    pts = dehomogenize(pw)
    return pts[0] if np.ndim(t) == 0 else pts


def eval_bezier_rectangle(
    rect: BezierRectangle, s: ParamType, t: ParamType
) -> np.ndarray:
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    ss, tt = np.broadcast_arrays(_unit_params(s), _unit_params(t))
    Bu = bernstein_basis(rect.degree_u, ss)
    Bv = bernstein_basis(rect.degree_v, tt)
    pw = np.einsum("ak,bk,abd->kd", Bu, Bv, rect.control_net)
    pts = dehomogenize(pw)
    return pts[0] if scalar else pts


def eval_bezier_triangle(tri: BezierTriangle, u: ParamType, v: ParamType) -> np.ndarray:
    """Evaluate over the unit triangle u >= 0, v >= 0, u + v <= 1."""
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    uu, vv = np.broadcast_arrays(
        np.atleast_1d(np.asarray(u, dtype=float)),
        np.atleast_1d(np.asarray(v, dtype=float)),
    )
    if (
        np.any(~np.isfinite(uu))
        or np.any(~np.isfinite(vv))
        or np.any(uu < -EPS)
        or np.any(vv < -EPS)
        or np.any(uu + vv > 1 + EPS)
    ):
        raise DomainError("Parameters outside of the unit triangle")
    uu = np.clip(uu, 0.0, 1.0)
    vv = np.clip(vv, 0.0, 1.0 - uu)
    pw = triangle_basis(tri.degree, uu, vv).T @ tri.control_points
    pts = dehomogenize(pw)
    return pts[0] if scalar else pts


def segment_from_points(
    points: Sequence[Sequence[float]], weights=None
) -> BezierSegment:
    """A segment from euclidean control points and optional weights."""
    return BezierSegment(as_homogeneous(np.asarray(points, dtype=float), weights))
