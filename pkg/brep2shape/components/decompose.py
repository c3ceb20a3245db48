"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 5, 2026

Exact conversion of NURBS entities into Bézier primitives.

Every routine here is shape preserving: the output evaluates to the input at
mapped parameters up to floating point round off.

"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np

from ..core.bezier import (
    BezierRectangle,
    BezierSegment,
    BezierTriangle,
    triangle_indices,
)
from ..core.errors import ArgumentError, DomainError, MultiplicityError
from ..core.geom import EPS, KnotVector, NurbsCurve, NurbsSurface


# -----------------------------------------------------------------------------
# Knot insertion
# -----------------------------------------------------------------------------
def _insert(
    U: np.ndarray, p: int, pw: np.ndarray, u: float
) -> tuple[np.ndarray, np.ndarray]:
    """Insert u once into U, refining points along axis 0.

    Trailing axes of `pw` are carried along so the same routine refines
    curves and either direction of a surface net.

    """
    k = int(np.searchsorted(U, u, side="right")) - 1
    Q = np.empty((len(pw) + 1,) + pw.shape[1:])
    Q[: k - p + 1] = pw[: k - p + 1]
    Q[k + 1 :] = pw[k:]
    i = np.arange(k - p + 1, k + 1)
    alpha = (u - U[i]) / (U[i + p] - U[i])
    alpha = alpha.reshape((-1,) + (1,) * (pw.ndim - 1))
    Q[k - p + 1 : k + 1] = alpha * pw[i] + (1.0 - alpha) * pw[i - 1]
    return np.insert(U, k + 1, u), Q


def _snap(kv: KnotVector, u: float) -> float:
    """Reuse an existing knot value when u is within the knot tolerance."""
    close = np.abs(kv.knots - u) <= kv.tolerance
    return float(kv.knots[close][0]) if np.any(close) else float(u)


def _check_insertion(kv: KnotVector, u: float, times: int) -> float:
    a, b = kv.domain
    tol = kv.tolerance
    if not (a + tol < u < b - tol):
        raise DomainError(f"Cannot insert knot {u} outside the open domain ({a}, {b})")
    s = kv.multiplicity(u)
    if s + times > kv.degree:
        raise MultiplicityError(
            f"Inserting {u} {times} time(s) raises its multiplicity from {s} "
            f"above the degree {kv.degree}"
        )
    return _snap(kv, u)


def insert_knot(curve: NurbsCurve, u_hat: float, times: int = 1) -> NurbsCurve:
    """Boehm insertion of `u_hat`, repeated `times` times.

    Parameters
    ----------
    curve: NurbsCurve
        The curve to refine.
    u_hat: float
        Parameter strictly inside the curve domain.
    times: int
        How many times to insert it; the final multiplicity may not exceed
        the degree.

    Returns
    -------
    curve: NurbsCurve
        A new curve with the same evaluation map.

    """
    if times < 1:
        raise ArgumentError(f"Insertion count must be positive, got {times}")
    kv = curve.knot_vector
    u = _check_insertion(kv, float(u_hat), times)
    U, pw = kv.knots, curve.control_points
    for _ in range(times):
        U, pw = _insert(U, curve.degree, pw, u)
    return NurbsCurve(curve.degree, KnotVector(U, curve.degree), pw)


def _bezier_refine(kv: KnotVector, pw: np.ndarray) -> tuple[list[float], np.ndarray]:
    """Raise every interior knot to multiplicity p along axis 0.

    Returns the break values (domain ends included) and the refined points.

    """
    p = kv.degree
    U = kv.knots
    a, b = kv.domain
    breaks = [a]
    for value, mult in kv.breaks():
        for _ in range(p - mult):
            U, pw = _insert(U, p, pw, value)
        breaks.append(value)
    breaks.append(b)
    return breaks, pw


def curve_to_bezier_segments(
    curve: NurbsCurve, entity: int = -1
) -> list[BezierSegment]:
    """Split a curve into one Bézier segment per non-empty knot span."""
    p = curve.degree
    if p < 1:
        raise ArgumentError("Degree 0 curves cannot be decomposed into segments")
    breaks, pw = _bezier_refine(curve.knot_vector, curve.control_points)
    return [
        BezierSegment(
            pw[i * p : i * p + p + 1], entity=entity, span=(breaks[i], breaks[i + 1])
        )
        for i in range(len(breaks) - 1)
    ]


def surface_to_bezier_rectangles(
    surface: NurbsSurface, entity: int = -1
) -> list[list[BezierRectangle]]:
    """Grid of Bézier patches indexed [i][j] along u then v.

    Trim loops are ignored here, see `quadtree_decompose`.

    """
    p, q = surface.degree_u, surface.degree_v
    if p < 1 or q < 1:
        raise ArgumentError("Surfaces need a degree of at least 1 in both directions")
    breaks_u, net = _bezier_refine(surface.knots_u, surface.control_net)
    breaks_v, net_t = _bezier_refine(surface.knots_v, net.transpose(1, 0, 2))
    net = net_t.transpose(1, 0, 2)
    grid = []
    for i in range(len(breaks_u) - 1):
        row = []
        for j in range(len(breaks_v) - 1):
            cell = ((breaks_u[i], breaks_u[i + 1]), (breaks_v[j], breaks_v[j + 1]))
            patch = net[i * p : i * p + p + 1, j * q : j * q + q + 1]
            row.append(BezierRectangle(patch, entity=entity, cell=cell))
        grid.append(row)
    return grid


# -----------------------------------------------------------------------------
# Sub patches
# -----------------------------------------------------------------------------
def _restrict_axis(pw: np.ndarray, p: int, a: float, b: float) -> np.ndarray:
    """Control points of the piece [a, b] of a Bézier along axis 0."""
    U = np.array([0.0] * (p + 1) + [1.0] * (p + 1))
    piece = 0
    for value in (a, b):
        if EPS < value < 1.0 - EPS:
            for _ in range(p):
                U, pw = _insert(U, p, pw, value)
    if a > EPS:
        piece = 1
    return pw[piece * p : piece * p + p + 1]


def restrict_rectangle(
    rect: BezierRectangle, s: tuple[float, float], t: tuple[float, float]
) -> BezierRectangle:
    """The sub patch of `rect` over [s0, s1] x [t0, t1] of its unit square.

    The result is reparameterized to [0, 1]^2 and its source cell maps the
    sub square into the source surface parameters.

    """
    (s0, s1), (t0, t1) = s, t
    if not (0.0 <= s0 < s1 <= 1.0 and 0.0 <= t0 < t1 <= 1.0):
        raise DomainError(f"Invalid sub square {s} x {t}")
    net = _restrict_axis(rect.control_net, rect.degree_u, s0, s1)
    net = _restrict_axis(net.transpose(1, 0, 2), rect.degree_v, t0, t1)
    net = net.transpose(1, 0, 2)
    (u0, u1), (v0, v1) = rect.cell
    du, dv = u1 - u0, v1 - v0
    cell = ((u0 + s0 * du, u0 + s1 * du), (v0 + t0 * dv, v0 + t1 * dv))
    return BezierRectangle(net, entity=rect.entity, cell=cell)


# -----------------------------------------------------------------------------
# Degree elevation
# -----------------------------------------------------------------------------
def elevate_segment_degree(seg: BezierSegment, target_degree: int) -> BezierSegment:
    """Raise the degree of a segment without changing its shape."""
    p = seg.degree
    if target_degree < p:
        raise ArgumentError(f"Cannot elevate a degree {p} segment to {target_degree}")
    if target_degree == p:
        return seg
    P = seg.control_points
    for r in range(p, target_degree):
        a = (np.arange(r + 2) / (r + 1))[:, None]
        Q = np.zeros((r + 2, 4))
        Q[1:] += a[1:] * P
        Q[:-1] += (1.0 - a[:-1]) * P
        P = Q
    return BezierSegment(P, entity=seg.entity, span=seg.span)


def elevate_triangle_degree(tri: BezierTriangle, target_degree: int) -> BezierTriangle:
    """Raise the total degree of a triangle without changing its shape."""
    d = tri.degree
    if target_degree < d:
        raise ArgumentError(f"Cannot elevate a degree {d} triangle to {target_degree}")
    if target_degree == d:
        return tri
    V = tri.control_points
    for r in range(d, target_degree):
        lookup = {ij: n for n, ij in enumerate(triangle_indices(r))}
        W = np.zeros(((r + 2) * (r + 3) // 2, 4))
        for n, (i, j) in enumerate(triangle_indices(r + 1)):
            k = r + 1 - i - j
            if i:
                W[n] += i * V[lookup[(i - 1, j)]]
            if j:
                W[n] += j * V[lookup[(i, j - 1)]]
            if k:
                W[n] += k * V[lookup[(i, j)]]
        V = W / (r + 1)
    return BezierTriangle(V, entity=tri.entity, cell=tri.cell, half=tri.half)


# -----------------------------------------------------------------------------
# Rectangle to triangles
# -----------------------------------------------------------------------------
def _binom(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n else 0


@lru_cache(32)
def conversion_matrix(p: int, q: int) -> np.ndarray:
    """Maps a flattened (p+1)(q+1) tensor net to the lower triangle of degree p + q.

    Row (i, j) in `triangle_indices(p + q)` order, column a * (q + 1) + b.

    """
    d = p + q
    rows = triangle_indices(d)
    M = np.zeros((len(rows), (p + 1) * (q + 1)))
    for r, (i, j) in enumerate(rows):
        scale = factorial(i) * factorial(j) * factorial(d - i - j) / factorial(d)
        for a in range(p + 1):
            for b in range(q + 1):
                c = comb(p, a) * comb(q, b)
                c *= _binom(p - a, j - b) * _binom(q - b, i - a)
                if c:
                    M[r, a * (q + 1) + b] = c * scale
    M.setflags(write=False)
    return M


def rectangle_to_triangles(
    rect: BezierRectangle,
) -> tuple[BezierTriangle, BezierTriangle]:
    """Split a patch along its diagonal into two triangles of degree p + q.

    The lower triangle T(u, v) = R(u, v) covers u + v <= 1. The upper one
    is the same conversion of the point reflected patch, so
    T(u, v) = R(1 - u, 1 - v).

    """
    p, q = rect.degree_u, rect.degree_v
    M = conversion_matrix(p, q)
    net = rect.control_net
    lower = M @ net.reshape(-1, 4)
    upper = M @ net[::-1, ::-1].reshape(-1, 4)
    return (
        BezierTriangle(lower, entity=rect.entity, cell=rect.cell, half="lower"),
        BezierTriangle(upper, entity=rect.entity, cell=rect.cell, half="upper"),
    )


def triangle_to_rectangle_params(
    tri: BezierTriangle, u: np.ndarray, v: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Unit square parameters of the source rectangle for triangle samples."""
    if tri.half == "lower":
        return np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    return 1.0 - np.asarray(u, dtype=float), 1.0 - np.asarray(v, dtype=float)


def triangle_to_surface_params(
    tri: BezierTriangle, u: np.ndarray, v: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Source surface parameters of triangle samples."""
    s, t = triangle_to_rectangle_params(tri, u, v)
    (u0, u1), (v0, v1) = tri.cell
    return u0 + s * (u1 - u0), v0 + t * (v1 - v0)
