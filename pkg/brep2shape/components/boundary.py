"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 6, 2026

Boundary approximation error of polyline flattening.

Arc lengths and squared deviations are integrated with Gauss-Legendre
quadrature, split at the knots of the curve. Derivatives use central
differences with a step relative to the integrated piece.

"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Sequence

import numpy as np
from atom.api import Atom, Float, Int, Typed

from ..core.errors import ArgumentError
from ..core.geom import NurbsCurve, eval_curve, rational_circle, rational_ellipse

log = logging.getLogger(__name__)

#: Quadrature nodes per integrated piece
GAUSS_NODES = 24

#: Central difference step relative to the integrated piece
FD_STEP = 1e-6

#: Second difference step for curvature, relative to the piece
CURVATURE_STEP = 1e-4


class BoundaryErrorReport(Atom):
    """Approximation error of a piecewise linear boundary."""

    #: Largest parameter step between consecutive breakpoints
    h = Float()

    #: Total arc length
    length = Float()

    #: Root mean square deviation per unit length
    rmse = Float()

    #: Chord to arc ratio of every piece, all in (0, 1]
    ratios = Typed(np.ndarray, factory=lambda: np.zeros(0))

    #: Curvature estimate at the middle of every piece
    curvatures = Typed(np.ndarray, factory=lambda: np.zeros(0))

    #: Boundary cells kept at the depth cap without meeting the threshold
    unconverged = Int()

    @property
    def converged(self) -> bool:
        return self.unconverged == 0

    @classmethod
    def combine(
        cls, reports: Sequence[BoundaryErrorReport], unconverged: int = 0
    ) -> BoundaryErrorReport:
        """Merge the reports of several curves weighting by arc length."""
        if not reports:
            return cls(unconverged=unconverged)
        length = sum(r.length for r in reports)
        sq = sum(r.rmse**2 * r.length for r in reports)
        return cls(
            h=max(r.h for r in reports),
            length=length,
            rmse=float(np.sqrt(sq / length)) if length > 0 else 0.0,
            ratios=np.concatenate([r.ratios for r in reports]),
            curvatures=np.concatenate([r.curvatures for r in reports]),
            unconverged=unconverged,
        )


@lru_cache(8)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _pieces(curve: NurbsCurve, t0: float, t1: float) -> list[tuple[float, float]]:
    """Split [t0, t1] at the interior knots of the curve."""
    inner = [k for k, _ in curve.knot_vector.breaks() if t0 < k < t1]
    edges = [t0, *inner, t1]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _speed(curve: NurbsCurve, t: np.ndarray, step: float) -> np.ndarray:
    d = (eval_curve(curve, t + step) - eval_curve(curve, t - step)) / (2 * step)
    return np.linalg.norm(d, axis=-1)


def _nodes(a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss(GAUSS_NODES)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), w * half


def arc_length(curve: NurbsCurve, t0: float, t1: float) -> float:
    """Length of the curve between two parameters."""
    total = 0.0
    for a, b in _pieces(curve, t0, t1):
        t, w = _nodes(a, b)
        total += float(np.sum(w * _speed(curve, t, FD_STEP * (b - a))))
    return total


def chord_to_arc(curve: NurbsCurve, t0: float, t1: float) -> float:
    """Chord length over arc length of the piece [t0, t1], clipped to 1."""
    if t1 <= t0:
        raise ArgumentError(f"Empty parameter interval [{t0}, {t1}]")
    arc = arc_length(curve, t0, t1)
    if arc <= 0:
        return 1.0
    chord = float(np.linalg.norm(eval_curve(curve, t1) - eval_curve(curve, t0)))
    return min(chord / arc, 1.0)


def curvature(curve: NurbsCurve, t: float, step: float) -> float:
    """|C' x C''| / |C'|^3 by central differences."""
    a, b = curve.domain
    t = min(max(t, a + step), b - step)
    c0, c1, c2 = eval_curve(curve, np.array([t - step, t, t + step]))
    d1 = (c2 - c0) / (2 * step)
    d2 = (c2 - 2 * c1 + c0) / step**2
    speed = np.linalg.norm(d1)
    if speed == 0:
        return 0.0
    return float(np.linalg.norm(np.cross(d1, d2)) / speed**3)


def flatten_pcurve(curve: NurbsCurve, tau: float, max_splits: int = 16) -> np.ndarray:
    """Breakpoints whose pieces all have a chord to arc ratio >= tau.

    Starts from the knot spans and bisects pieces that are too curved, up to
    `max_splits` levels.

    """
    if not 0 < tau < 1:
        raise ArgumentError(f"Chord to arc threshold must be in (0, 1), got {tau}")
    a, b = curve.domain
    stack = [(t0, t1, 0) for t0, t1 in reversed(_pieces(curve, a, b))]
    result = [a]
    while stack:
        t0, t1, level = stack.pop()
        if level < max_splits and chord_to_arc(curve, t0, t1) < tau:
            tm = 0.5 * (t0 + t1)
            stack.append((tm, t1, level + 1))
            stack.append((t0, tm, level + 1))
            continue
        result.append(t1)
    return np.array(result)


def boundary_rmse(
    pcurve: NurbsCurve, breakpoints: Sequence[float]
) -> BoundaryErrorReport:
    """Error of the polyline through `pcurve` at `breakpoints`.

    Parameters
    ----------
    pcurve: NurbsCurve
        The curve being approximated.
    breakpoints: Sequence[float]
        Sorted parameters spanning the curve domain.

    Returns
    -------
    report: BoundaryErrorReport
        E_RMSE = sqrt(1/L sum_i int |C(t) - L_i(t)|^2 ds) with L_i the chord
        of piece i.

    """
    t = np.asarray(breakpoints, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ArgumentError("At least two breakpoints are required")
    if np.any(np.diff(t) <= 0):
        raise ArgumentError("Breakpoints must be strictly increasing")
    ends = eval_curve(pcurve, t)
    length = 0.0
    sq = 0.0
    ratios = []
    kappa = []
    for i in range(len(t) - 1):
        ta, tb = t[i], t[i + 1]
        pa, pb = ends[i], ends[i + 1]
        arc = 0.0
        for a, b in _pieces(pcurve, ta, tb):
            x, w = _nodes(a, b)
            speed = _speed(pcurve, x, FD_STEP * (b - a))
            chord = pa + ((x - ta) / (tb - ta))[:, None] * (pb - pa)
            dev = np.sum((eval_curve(pcurve, x) - chord) ** 2, axis=-1)
            arc += float(np.sum(w * speed))
            sq += float(np.sum(w * dev * speed))
        length += arc
        chord_length = float(np.linalg.norm(pb - pa))
        ratios.append(min(chord_length / arc, 1.0) if arc > 0 else 1.0)
        kappa.append(curvature(pcurve, 0.5 * (ta + tb), CURVATURE_STEP * (tb - ta)))
    return BoundaryErrorReport(
        h=float(np.max(np.diff(t))),
        length=length,
        rmse=float(np.sqrt(sq / length)) if length > 0 else 0.0,
        ratios=np.array(ratios),
        curvatures=np.array(kappa),
    )


def reference_curve(kind: str) -> NurbsCurve:
    """Reference curves of the convergence study."""
    if kind == "circle":
        return rational_circle()
    if kind == "ellipse":
        return rational_ellipse(rx=1.0, ry=0.5)
    raise ArgumentError(f"Unknown reference curve '{kind}'")


def convergence_study(
    curve: NurbsCurve, levels: int = 6, start: int = 3
) -> tuple[np.ndarray, np.ndarray, float]:
    """E_RMSE over dyadic refinements h = 2^-start ... 2^-(start + levels - 1).

    Returns the steps, the errors and the least squares slope of
    log E_RMSE against log h.

    """
    if levels < 2:
        raise ArgumentError(f"At least two refinement levels are needed, got {levels}")
    a, b = curve.domain
    hs = []
    errors = []
    for k in range(start, start + levels):
        n = 2**k
        report = boundary_rmse(curve, np.linspace(a, b, n + 1))
        hs.append(report.h)
        errors.append(report.rmse)
        log.debug("h=%g rmse=%g", report.h, report.rmse)
    hs = np.array(hs)
    errors = np.array(errors)
    slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    return hs, errors, slope
