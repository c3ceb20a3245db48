"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 7, 2026

Adaptive quadtree decomposition of trimmed surfaces.

Each Bézier patch of the surface is a quadtree root. Cells are classified
against the trim loops flattened to polylines: a cell any polyline segment
crosses is a boundary cell, otherwise the even-odd rule at its center makes
it interior or exterior. Boundary cells split until the loop pieces inside
them are flat enough.

"""

from __future__ import annotations

import logging
from typing import Iterator, Optional

import numpy as np
from atom.api import Atom, Bool, Enum, Float, Int, List, Tuple, Typed

from ..core.bezier import BezierRectangle, BezierTriangle
from ..core.errors import ArgumentError
from ..core.geom import NurbsSurface, eval_curve
from .boundary import (
    BoundaryErrorReport,
    boundary_rmse,
    chord_to_arc,
    flatten_pcurve,
)
from .decompose import (
    rectangle_to_triangles,
    restrict_rectangle,
    surface_to_bezier_rectangles,
)

log = logging.getLogger(__name__)

#: Accepted chord to arc thresholds, open interval
TAU_RANGE = (0.9, 1.0)

#: Clip fraction tolerance when chaining polyline segments
CHAIN_TOL = 1e-9


class QuadCell(Atom):
    """A dyadic cell of one Bézier patch of a surface.

    The cell covers [i, i+1] x [j, j+1] / 2^depth of the unit square of
    patch `root`.

    """

    #: Index (row, column) of the Bézier patch being subdivided
    root = Tuple(int, default=(0, 0))

    #: Subdivision level, 0 for the whole patch
    depth = Int()

    #: Dyadic position inside the patch
    i = Int()
    j = Int()

    #: Bounds ((u0, u1), (v0, v1)) in surface parameters
    bounds = Tuple(default=((0.0, 1.0), (0.0, 1.0)))

    #: Position against the trim loops
    classification = Enum("interior", "exterior", "boundary")

    #: Smallest chord to arc ratio of the loop pieces inside the cell
    min_ratio = Float(1.0)

    #: False for boundary cells kept at the depth cap above the threshold
    converged = Bool(True)

    @property
    def square(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Bounds in the unit square of the root patch."""
        n = float(2**self.depth)
        return (self.i / n, (self.i + 1) / n), (self.j / n, (self.j + 1) / n)

    @property
    def area(self) -> float:
        (u0, u1), (v0, v1) = self.bounds
        return (u1 - u0) * (v1 - v0)

    def children(self, patch_cell) -> Iterator[QuadCell]:
        for dj in (0, 1):
            for di in (0, 1):
                child = QuadCell(
                    root=self.root,
                    depth=self.depth + 1,
                    i=2 * self.i + di,
                    j=2 * self.j + dj,
                )
                child.bounds = _cell_bounds(patch_cell, child.square)
                yield child


def _cell_bounds(patch_cell, square):
    (u0, u1), (v0, v1) = patch_cell
    (s0, s1), (t0, t1) = square
    du, dv = u1 - u0, v1 - v0
    return (u0 + s0 * du, u0 + s1 * du), (v0 + t0 * dv, v0 + t1 * dv)


class LoopPolylines(Atom):
    """Flattened trim loops as one array of segments in loop order."""

    #: Segment start and end points, shape (n, 2)
    start = Typed(np.ndarray)
    end = Typed(np.ndarray)

    #: Loop, curve index within the loop and position within the loop
    loop = Typed(np.ndarray)
    curve = Typed(np.ndarray)
    position = Typed(np.ndarray)

    #: Curve parameters at both ends of every segment
    ta = Typed(np.ndarray)
    tb = Typed(np.ndarray)

    #: Per loop segment counts
    counts = List(int)

    #: Whether one of the loops bounds the face from outside
    has_outer = Bool()

    #: The flattening breakpoints of every pcurve, per loop
    breakpoints = List()

    #: The pcurves per loop
    pcurves = List()


def _cat(items: list, dtype=float) -> np.ndarray:
    return np.concatenate(items).astype(dtype) if items else np.zeros(0, dtype=dtype)


def flatten_loops(surface: NurbsSurface, tau: float) -> LoopPolylines:
    starts, ends, loops, curves, positions, tas, tbs = [], [], [], [], [], [], []
    counts = []
    breakpoints = []
    pcurves = []
    for li, loop in enumerate(surface.trim_loops):
        loop.check_closed()
        pos = 0
        loop_breaks = []
        for ci, curve in enumerate(loop.pcurves):
            t = flatten_pcurve(curve, tau)
            xy = eval_curve(curve, t)[:, :2]
            n = len(t) - 1
            starts.append(xy[:-1])
            ends.append(xy[1:])
            tas.append(t[:-1])
            tbs.append(t[1:])
            loops.append(np.full(n, li))
            curves.append(np.full(n, ci))
            positions.append(np.arange(pos, pos + n))
            pos += n
            loop_breaks.append(t)
        counts.append(pos)
        breakpoints.append(loop_breaks)
        pcurves.append(list(loop.pcurves))
    return LoopPolylines(
        start=np.concatenate(starts) if starts else np.zeros((0, 2)),
        end=np.concatenate(ends) if ends else np.zeros((0, 2)),
        loop=_cat(loops, int),
        curve=_cat(curves, int),
        position=_cat(positions, int),
        ta=_cat(tas),
        tb=_cat(tbs),
        counts=counts,
        has_outer=any(lp.orientation == "outer" for lp in surface.trim_loops),
        breakpoints=breakpoints,
        pcurves=pcurves,
    )


def clip_segments(
    start: np.ndarray, end: np.ndarray, bounds
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Liang-Barsky clipping of segments against a closed box.

    Returns the hit mask and the entry and exit fractions along each segment.

    """
    (x0, x1), (y0, y1) = bounds
    d = end - start
    n = len(start)
    f0 = np.zeros(n)
    f1 = np.ones(n)
    hit = np.ones(n, dtype=bool)
    for axis, lo, hi in ((0, x0, x1), (1, y0, y1)):
        s = start[:, axis]
        for p, q in ((-d[:, axis], s - lo), (d[:, axis], hi - s)):
            parallel = p == 0
            hit &= ~(parallel & (q < 0))
            r = np.divide(q, p, out=np.zeros(n), where=~parallel)
            f0 = np.where(p < 0, np.maximum(f0, r), f0)
            f1 = np.where(p > 0, np.minimum(f1, r), f1)
    hit &= f0 <= f1
    return hit, f0, f1


def point_inside(polylines: LoopPolylines, x: float, y: float) -> bool:
    """Even-odd test; without an outer loop the domain bounds the face."""
    a, b = polylines.start, polylines.end
    crosses = (a[:, 1] > y) != (b[:, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    odd = bool(np.count_nonzero(crosses & (x < xi)) % 2)
    return odd if polylines.has_outer else not odd


def _runs(polylines: LoopPolylines, idx: np.ndarray, f0: np.ndarray, f1: np.ndarray):
    """Chain clipped segments into contiguous loop pieces.

    Yields lists of (loop, curve, t0, t1) in traversal order.

    """
    for li, count in enumerate(polylines.counts):
        sel = idx[polylines.loop[idx] == li]
        if not len(sel):
            continue
        order = sel[np.argsort(polylines.position[sel])]
        runs: list[list[int]] = [[order[0]]]
        for k in order[1:]:
            prev = runs[-1][-1]
            joined = (
                polylines.position[k] == polylines.position[prev] + 1
                and f1[prev] >= 1 - CHAIN_TOL
                and f0[k] <= CHAIN_TOL
            )
            if joined:
                runs[-1].append(k)
            else:
                runs.append([k])
        first, last = runs[0], runs[-1]
        if (
            len(runs) > 1
            and polylines.position[first[0]] == 0
            and polylines.position[last[-1]] == count - 1
            and f0[first[0]] <= CHAIN_TOL
            and f1[last[-1]] >= 1 - CHAIN_TOL
        ):
            runs = [last + first] + runs[1:-1]
        for run in runs:
            pieces = []
            for k in run:
                ta, tb = polylines.ta[k], polylines.tb[k]
                t0 = ta + f0[k] * (tb - ta)
                t1 = ta + f1[k] * (tb - ta)
                ci = int(polylines.curve[k])
                joined = (
                    pieces
                    and pieces[-1][1] == ci
                    and abs(pieces[-1][3] - t0) <= CHAIN_TOL * (tb - ta)
                )
                if joined:
                    pieces[-1] = (li, ci, pieces[-1][2], t1)
                else:
                    pieces.append((li, ci, t0, t1))
            yield pieces


def piece_ratio(polylines: LoopPolylines, piece) -> float:
    """Chord to arc ratio of one curve piece (loop, curve, t0, t1).

    Pieces of different pcurves are measured apart.

    """
    li, ci, t0, t1 = piece
    if not t1 > t0:
        return 1.0
    return chord_to_arc(polylines.pcurves[li][ci], t0, t1)


def classify_cell(cell: QuadCell, polylines: Optional[LoopPolylines]):
    """Set the classification and the minimum ratio of a cell."""
    if polylines is None or not len(polylines.start):
        cell.classification = "interior"
        return
    hit, f0, f1 = clip_segments(polylines.start, polylines.end, cell.bounds)
    if np.any(hit):
        cell.classification = "boundary"
        idx = np.flatnonzero(hit)
        runs = _runs(polylines, idx, f0, f1)
        ratios = [piece_ratio(polylines, piece) for pieces in runs for piece in pieces]
        cell.min_ratio = min(ratios) if ratios else 1.0
        return
    (u0, u1), (v0, v1) = cell.bounds
    inside = point_inside(polylines, 0.5 * (u0 + u1), 0.5 * (v0 + v1))
    cell.classification = "interior" if inside else "exterior"


def _leaf_triangles(
    rect: BezierRectangle, cell: QuadCell
) -> tuple[BezierTriangle, BezierTriangle]:
    if cell.depth == 0:
        return rectangle_to_triangles(rect)
    s, t = cell.square
    return rectangle_to_triangles(restrict_rectangle(rect, s, t))


def quadtree_decompose(
    surface: NurbsSurface, tau: float = 0.995, max_depth: int = 8, entity: int = -1
) -> tuple[list[BezierTriangle], list[QuadCell], BoundaryErrorReport]:
    """Decompose a possibly trimmed surface into Bézier triangles.

    Parameters
    ----------
    surface: NurbsSurface
        The face geometry with its trim loops.
    tau: float
        Chord to arc threshold in (0.9, 1) a boundary cell must reach.
    max_depth: int
        Depth cap; boundary cells at the cap are kept and flagged.
    entity: int
        Face id recorded on the primitives.

    Returns
    -------
    result: tuple
        The triangles of all retained leaves, every leaf cell (exterior
        leaves included so that the leaves partition the domain) and the
        boundary error report.

    """
    lo, hi = TAU_RANGE
    if not lo < tau < hi:
        raise ArgumentError(
            f"Chord to arc threshold must be in ({lo}, {hi}), got {tau}"
        )
    if max_depth < 1:
        raise ArgumentError(f"Quadtree depth cap must be at least 1, got {max_depth}")
    polylines = flatten_loops(surface, tau) if surface.is_trimmed else None
    grid = surface_to_bezier_rectangles(surface, entity=entity)
    triangles: list[BezierTriangle] = []
    leaves: list[QuadCell] = []
    unconverged = 0
    for ri, row in enumerate(grid):
        for rj, rect in enumerate(row):
            stack = [QuadCell(root=(ri, rj), bounds=rect.cell)]
            while stack:
                cell = stack.pop()
                classify_cell(cell, polylines)
                if cell.classification == "boundary" and cell.min_ratio < tau:
                    if cell.depth < max_depth:
                        stack.extend(reversed(list(cell.children(rect.cell))))
                        continue
                    cell.converged = False
                    unconverged += 1
                leaves.append(cell)
                if cell.classification != "exterior":
                    triangles.extend(_leaf_triangles(rect, cell))
    if unconverged:
        log.warning(
            "Face %s: %s boundary cell(s) above the chord to arc threshold %s "
            "at depth %s",
            entity,
            unconverged,
            tau,
            max_depth,
        )
    if polylines is None:
        report = BoundaryErrorReport()
    else:
        reports = [
            boundary_rmse(curve, t)
            for curves, breaks in zip(polylines.pcurves, polylines.breakpoints)
            for curve, t in zip(curves, breaks)
        ]
        report = BoundaryErrorReport.combine(reports, unconverged)
    return triangles, leaves, report

