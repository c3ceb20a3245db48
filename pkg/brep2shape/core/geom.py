"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 2, 2026

Exact evaluation of Bernstein, B-spline and NURBS entities.

All control points are stored in homogeneous form `(w*x, w*y, w*z, w)` so
that every rational operation is a linear one on the lifted points.

"""

from __future__ import annotations

from math import comb, sqrt
from typing import Optional, Sequence, Union

import numpy as np
from atom.api import Atom, Enum, Float, Int, List, Typed

from .errors import ArgumentError, DegeneracyError, DomainError, TopologyError

#: Absolute tolerance for dimensionless comparisons
EPS = 1e-12

#: Knot equality tolerance, relative to the knot range
KNOT_TOL = 1e-10

ParamType = Union[float, Sequence[float], np.ndarray]


def as_homogeneous(
    points: np.ndarray, weights: Optional[np.ndarray] = None
) -> np.ndarray:
    """Lift euclidean points of shape (..., 3) or (..., 2) to (..., 4).

    Two dimensional points are placed in the z = 0 plane.

    """
    points = np.asarray(points, dtype=float)
    if points.shape[-1] == 2:
        points = np.concatenate([points, np.zeros(points.shape[:-1] + (1,))], axis=-1)
    if points.shape[-1] != 3:
        raise ArgumentError(f"Expected 2-D or 3-D points, got shape {points.shape}")
    if weights is None:
        weights = np.ones(points.shape[:-1])
    weights = np.asarray(weights, dtype=float)
    if weights.shape != points.shape[:-1]:
        raise ArgumentError(
            f"Weight shape {weights.shape} does not match points {points.shape}"
        )
    if np.any(~(weights > 0)):
        raise ArgumentError("Control point weights must be strictly positive")
    return np.concatenate([points * weights[..., None], weights[..., None]], axis=-1)


def dehomogenize(pw: np.ndarray) -> np.ndarray:
    """Project homogeneous points (..., 4) back to euclidean space."""
    w = pw[..., 3]
    if np.any(~(w > 0)):
        raise DegeneracyError("Accumulated weight is not positive")
    return pw[..., :3] / w[..., None]


class HomogeneousPoint(Atom):
    """A weighted control point."""

    #: Weighted coordinates
    wx = Float()
    wy = Float()
    wz = Float()

    #: Rational weight
    w = Float(1.0)

    def __init__(
        self, wx: float = 0.0, wy: float = 0.0, wz: float = 0.0, w: float = 1.0
    ):
        if not w > 0:
            raise ArgumentError(f"Weight must be positive, got {w}")
        super().__init__(wx=wx, wy=wy, wz=wz, w=w)

    @classmethod
    def from_euclidean(
        cls, x: float, y: float, z: float = 0.0, w: float = 1.0
    ) -> HomogeneousPoint:
        return cls(x * w, y * w, z * w, w)

    @classmethod
    def from_array(cls, pw: Sequence[float]) -> HomogeneousPoint:
        return cls(*(float(v) for v in pw))

    def euclidean(self) -> np.ndarray:
        return np.array([self.wx, self.wy, self.wz]) / self.w

    def as_array(self) -> np.ndarray:
        return np.array([self.wx, self.wy, self.wz, self.w])


class KnotVector(Atom):
    """A clamped, non-decreasing knot vector of a given degree."""

    #: Knot values (read only array)
    knots = Typed(np.ndarray)

    #: Degree of the basis defined on these knots
    degree = Int()

    def __init__(self, knots: Sequence[float], degree: int):
        knots = np.array(knots, dtype=float)
        p = int(degree)
        if p < 0:
            raise ArgumentError(f"Degree must be non-negative, got {p}")
        if knots.ndim != 1 or len(knots) < 2 * (p + 1):
            raise ArgumentError(
                f"A degree {p} knot vector needs at least {2 * (p + 1)} knots"
            )
        if not np.all(np.isfinite(knots)):
            raise ArgumentError("Knot values must be finite")
        if np.any(np.diff(knots) < 0):
            raise ArgumentError("Knot vector is not non-decreasing")
        extent = knots[-1] - knots[0]
        if not extent > 0:
            raise ArgumentError("Knot vector has an empty range")
        tol = KNOT_TOL * extent
        first = int(np.sum(np.abs(knots - knots[0]) <= tol))
        last = int(np.sum(np.abs(knots - knots[-1]) <= tol))
        if first != p + 1 or last != p + 1:
            raise ArgumentError(
                f"Knot vector is not clamped: end multiplicities ({first}, {last}) "
                f"but degree {p} requires {p + 1}"
            )
        knots.setflags(write=False)
        super().__init__(knots=knots, degree=p)
        for value, mult in self.breaks():
            if mult > p:
                raise ArgumentError(
                    f"Interior knot {value} has multiplicity {mult} above degree {p}"
                )

    # -------------------------------------------------------------------------
    # Queries
    # -------------------------------------------------------------------------
    @property
    def tolerance(self) -> float:
        return KNOT_TOL * (self.knots[-1] - self.knots[0])

    @property
    def domain(self) -> tuple[float, float]:
        p = self.degree
        return float(self.knots[p]), float(self.knots[-p - 1])

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    def multiplicity(self, u: float) -> int:
        return int(np.sum(np.abs(self.knots - u) <= self.tolerance))

    def breaks(self) -> list[tuple[float, int]]:
        """The distinct interior knot values and their multiplicities."""
        p = self.degree
        interior = self.knots[p + 1 : len(self.knots) - p - 1]
        tol = self.tolerance
        result: list[tuple[float, int]] = []
        for k in interior:
            if result and abs(k - result[-1][0]) <= tol:
                result[-1] = (result[-1][0], result[-1][1] + 1)
            else:
                result.append((float(k), 1))
        return result

    def span(self, u: np.ndarray) -> np.ndarray:
        """Index i of the half-open span [u_i, u_i+1) holding each u.

        The end of the domain maps to the last non-empty span.

        """
        n = self.n_basis - 1
        spans = np.searchsorted(self.knots, u, side="right") - 1
        return np.clip(spans, self.degree, n)

    def check_domain(self, u: ParamType) -> np.ndarray:
        """Clip parameters to the domain or raise a `DomainError`."""
        a, b = self.domain
        u = np.atleast_1d(np.asarray(u, dtype=float))
        tol = EPS * (b - a)
        if np.any(~np.isfinite(u)) or np.any(u < a - tol) or np.any(u > b + tol):
            raise DomainError(f"Parameter outside of the domain [{a}, {b}]")
        return np.clip(u, a, b)

    def __len__(self) -> int:
        return len(self.knots)


def basis_functions(
    knots: np.ndarray, p: int, spans: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Nonzero B-spline basis values N_{span-p..span, p}(u), shape (p+1, k).

    Vectorized triangular scheme over all parameters at once.

    """
    k = len(u)
    N = np.zeros((p + 1, k))
    N[0] = 1.0
    left = np.zeros((p + 1, k))
    right = np.zeros((p + 1, k))
    for j in range(1, p + 1):
        left[j] = u - knots[spans + 1 - j]
        right[j] = knots[spans + j] - u
        saved = np.zeros(k)
        for r in range(j):
            temp = N[r] / (right[r + 1] + left[j - r])
            N[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        N[j] = saved
    return N


def bernstein(i: int, n: int, u: ParamType) -> Union[float, np.ndarray]:
    """The Bernstein polynomial C(n, i) u^i (1 - u)^(n - i)."""
    if n < 0 or not 0 <= i <= n:
        raise ArgumentError(f"Bernstein index {i} out of range for degree {n}")
    u = np.asarray(u, dtype=float)
    value = comb(n, i) * u**i * (1.0 - u) ** (n - i)
    return float(value) if value.ndim == 0 else value


def bernstein_basis(n: int, u: ParamType) -> np.ndarray:
    """All n + 1 Bernstein values at each parameter, shape (n+1, k)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    i = np.arange(n + 1)[:, None]
    binom = np.array([comb(n, j) for j in range(n + 1)], dtype=float)[:, None]
    return binom * u[None, :] ** i * (1.0 - u[None, :]) ** (n - i)


def bspline_basis(
    i: int, p: int, u: float, knots: Union[KnotVector, Sequence[float]]
) -> float:
    """N_{i,p}(u) by the Cox–de Boor recursion with the 0/0 = 0 convention.

    The last non-empty span is closed so the basis interpolates at the end
    of the domain.

    """
    U = knots.knots if isinstance(knots, KnotVector) else np.asarray(knots, dtype=float)
    if i < 0 or i + p + 1 >= len(U):
        return 0.0
    end = U[-1]

    def N(i: int, p: int) -> float:
        if p == 0:
            if U[i] <= u < U[i + 1]:
                return 1.0
            if u == end and U[i] < U[i + 1] == end:
                return 1.0
            return 0.0
        value = 0.0
        d = U[i + p] - U[i]
        if d != 0:
            value += (u - U[i]) / d * N(i, p - 1)
        d = U[i + p + 1] - U[i + 1]
        if d != 0:
            value += (U[i + p + 1] - u) / d * N(i + 1, p - 1)
        return value

    return N(i, p)


class NurbsCurve(Atom):
    """A rational B-spline curve.

    Parameter space curves (pcurves) use the same type with z = 0.

    """

    #: Polynomial degree
    degree = Int()

    #: Clamped knot vector
    knot_vector = Typed(KnotVector)

    #: Homogeneous control points, one row per point
    control_points = Typed(np.ndarray)

    def __init__(
        self,
        degree: int,
        knots: Union[KnotVector, Sequence[float]],
        control_points: np.ndarray,
    ):
        if not isinstance(knots, KnotVector):
            knots = KnotVector(knots, degree)
        if knots.degree != degree:
            raise ArgumentError("Knot vector degree does not match the curve degree")
        pw = np.array(control_points, dtype=float)
        if pw.ndim != 2 or pw.shape[1] != 4:
            raise ArgumentError(
                f"Control points must have shape (n, 4), got {pw.shape}"
            )
        if len(pw) != knots.n_basis:
            raise ArgumentError(
                f"Expected {knots.n_basis} control points for {len(knots)} knots "
                f"of degree {degree}, got {len(pw)}"
            )
        if np.any(~(pw[:, 3] > 0)):
            raise ArgumentError("Control point weights must be strictly positive")
        pw.setflags(write=False)
        super().__init__(degree=degree, knot_vector=knots, control_points=pw)

    @classmethod
    def from_points(
        cls,
        degree: int,
        knots: Sequence[float],
        points: np.ndarray,
        weights: Optional[np.ndarray] = None,
    ) -> NurbsCurve:
        """Build a curve from euclidean points (2-D or 3-D) and weights."""
        return cls(degree, knots, as_homogeneous(points, weights))

    @property
    def knots(self) -> np.ndarray:
        return self.knot_vector.knots

    @property
    def domain(self) -> tuple[float, float]:
        return self.knot_vector.domain

    @property
    def weights(self) -> np.ndarray:
        return self.control_points[:, 3]

    @property
    def points(self) -> np.ndarray:
        return dehomogenize(self.control_points)

    def point(self, i: int) -> HomogeneousPoint:
        return HomogeneousPoint.from_array(self.control_points[i])


class TrimLoop(Atom):
    """A closed loop of parameter space curves bounding a face region."""

    #: Ordered pcurves, each one ending where the next one starts
    pcurves = List(Typed(NurbsCurve))

    #: Whether this loop bounds the face from the outside or cuts a hole
    orientation = Enum("outer", "inner")

    def start(self) -> np.ndarray:
        curve = self.pcurves[0]
        return eval_curve(curve, curve.domain[0])[:2]

    def end(self) -> np.ndarray:
        curve = self.pcurves[-1]
        return eval_curve(curve, curve.domain[1])[:2]

    def is_closed(self, tol: float = 1e-9) -> bool:
        if not self.pcurves:
            return False
        n = len(self.pcurves)
        for i, curve in enumerate(self.pcurves):
            nxt = self.pcurves[(i + 1) % n]
            a = eval_curve(curve, curve.domain[1])
            b = eval_curve(nxt, nxt.domain[0])
            if np.linalg.norm(a - b) > tol:
                return False
        return True

    def check_closed(self, tol: float = 1e-9):
        if not self.is_closed(tol):
            raise TopologyError(f"Trim loop ({self.orientation}) is not closed")

    def signed_area(self, samples: int = 64) -> float:
        """Shoelace area of a dense sampling; positive when counter-clockwise."""
        pts = []
        for curve in self.pcurves:
            a, b = curve.domain
            t = np.linspace(a, b, samples, endpoint=False)
            pts.append(eval_curve(curve, t)[:, :2])
        xy = np.concatenate(pts)
        x, y = xy[:, 0], xy[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def normalized(self) -> TrimLoop:
        """Outer loops counter-clockwise, inner loops clockwise."""
        ccw = self.signed_area() > 0
        if ccw == (self.orientation == "outer"):
            return self
        return TrimLoop(
            pcurves=[reverse_curve(c) for c in reversed(self.pcurves)],
            orientation=self.orientation,
        )


class NurbsSurface(Atom):
    """A tensor-product rational B-spline surface, optionally trimmed."""

    #: Degrees along u and v
    degree_u = Int()
    degree_v = Int()

    #: Clamped knot vectors along u and v
    knots_u = Typed(KnotVector)
    knots_v = Typed(KnotVector)

    #: Homogeneous control net of shape (nu, nv, 4)
    control_net = Typed(np.ndarray)

    #: Trim loops in parameter space, empty when untrimmed
    trim_loops = List(Typed(TrimLoop))

    def __init__(
        self,
        degree_u: int,
        degree_v: int,
        knots_u: Union[KnotVector, Sequence[float]],
        knots_v: Union[KnotVector, Sequence[float]],
        control_net: np.ndarray,
        trim_loops: Sequence[TrimLoop] = (),
    ):
        if not isinstance(knots_u, KnotVector):
            knots_u = KnotVector(knots_u, degree_u)
        if not isinstance(knots_v, KnotVector):
            knots_v = KnotVector(knots_v, degree_v)
        if knots_u.degree != degree_u or knots_v.degree != degree_v:
            raise ArgumentError("Knot vector degrees do not match the surface degrees")
        pw = np.array(control_net, dtype=float)
        shape = (knots_u.n_basis, knots_v.n_basis, 4)
        if pw.shape != shape:
            raise ArgumentError(
                f"Expected a control net of shape {shape}, got {pw.shape}"
            )
        if np.any(~(pw[..., 3] > 0)):
            raise ArgumentError("Control point weights must be strictly positive")
        pw.setflags(write=False)
        super().__init__(
            degree_u=degree_u,
            degree_v=degree_v,
            knots_u=knots_u,
            knots_v=knots_v,
            control_net=pw,
            trim_loops=list(trim_loops),
        )

    @classmethod
    def from_points(
        cls,
        degree_u: int,
        degree_v: int,
        knots_u: Sequence[float],
        knots_v: Sequence[float],
        points: np.ndarray,
        weights: Optional[np.ndarray] = None,
        trim_loops: Sequence[TrimLoop] = (),
    ) -> NurbsSurface:
        return cls(
            degree_u,
            degree_v,
            knots_u,
            knots_v,
            as_homogeneous(points, weights),
            trim_loops,
        )

    @property
    def domain(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return self.knots_u.domain, self.knots_v.domain

    @property
    def is_trimmed(self) -> bool:
        return bool(self.trim_loops)

    @property
    def points(self) -> np.ndarray:
        return dehomogenize(self.control_net)

    def point(self, i: int, j: int) -> HomogeneousPoint:
        return HomogeneousPoint.from_array(self.control_net[i, j])


# -----------------------------------------------------------------------------
# Evaluation
# -----------------------------------------------------------------------------
def _scalar_or_array(values: np.ndarray, param: ParamType) -> np.ndarray:
    return values[0] if np.ndim(param) == 0 else values


def eval_curve(curve: NurbsCurve, u: ParamType) -> np.ndarray:
    """Evaluate a curve at one parameter (shape (3,)) or many (shape (k, 3))."""
    return _scalar_or_array(dehomogenize(eval_curve_homogeneous(curve, u)), u)


def eval_curve_homogeneous(curve: NurbsCurve, u: ParamType) -> np.ndarray:
    """Homogeneous curve points, always of shape (k, 4)."""
    kv = curve.knot_vector
    t = kv.check_domain(u)
    p = curve.degree
    spans = kv.span(t)
    N = basis_functions(kv.knots, p, spans, t)
    idx = spans[None, :] - p + np.arange(p + 1)[:, None]
    return np.einsum("ak,akd->kd", N, curve.control_points[idx])


def eval_surface(surface: NurbsSurface, u: ParamType, v: ParamType) -> np.ndarray:
    """Evaluate a surface ignoring its trim loops.

    `u` and `v` broadcast against each other; a scalar pair returns shape (3,).

    """
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    uu, vv = np.broadcast_arrays(
        np.atleast_1d(np.asarray(u, dtype=float)),
        np.atleast_1d(np.asarray(v, dtype=float)),
    )
    ku, kv = surface.knots_u, surface.knots_v
    su = ku.check_domain(uu.ravel())
    sv = kv.check_domain(vv.ravel())
    p, q = surface.degree_u, surface.degree_v
    spans_u = ku.span(su)
    spans_v = kv.span(sv)
    Nu = basis_functions(ku.knots, p, spans_u, su)
    Nv = basis_functions(kv.knots, q, spans_v, sv)
    iu = spans_u[None, :] - p + np.arange(p + 1)[:, None]
    iv = spans_v[None, :] - q + np.arange(q + 1)[:, None]
    net = surface.control_net[iu[:, None, :], iv[None, :, :]]
    pw = np.einsum("ak,bk,abkd->kd", Nu, Nv, net)
    pts = dehomogenize(pw)
    return pts[0] if scalar else pts.reshape(uu.shape + (3,))


# -----------------------------------------------------------------------------
# Constructors
# -----------------------------------------------------------------------------
#: Knots of the standard 9 point rational quadratic circle
CIRCLE_KNOTS = (0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0)


def circle_net(
    center: Sequence[float] = (0.0, 0.0, 0.0),
    rx: float = 1.0,
    ry: Optional[float] = None,
    xaxis: Sequence[float] = (1.0, 0.0, 0.0),
    yaxis: Sequence[float] = (0.0, 1.0, 0.0),
    clockwise: bool = False,
) -> np.ndarray:
    """Homogeneous control points of the 9 point rational ellipse."""
    ry = rx if ry is None else ry
    c = np.asarray(center, dtype=float)
    if c.shape == (2,):
        c = np.append(c, 0.0)
    ex = np.asarray(xaxis, dtype=float)
    ey = np.asarray(yaxis, dtype=float)
    if ex.shape == (2,):
        ex = np.append(ex, 0.0)
    if ey.shape == (2,):
        ey = np.append(ey, 0.0)
    corners = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
        (1, 0),
    ]
    if clockwise:
        corners = [(a, -b) for a, b in corners]
    s = sqrt(2.0) / 2.0
    points = np.array([c + a * rx * ex + b * ry * ey for a, b in corners])
    weights = np.array([1.0 if i % 2 == 0 else s for i in range(9)])
    return as_homogeneous(points, weights)


def rational_circle(
    center: Sequence[float] = (0.0, 0.0, 0.0),
    radius: float = 1.0,
    xaxis: Sequence[float] = (1.0, 0.0, 0.0),
    yaxis: Sequence[float] = (0.0, 1.0, 0.0),
    clockwise: bool = False,
) -> NurbsCurve:
    """The exact full circle as a rational quadratic with four arcs."""
    if not radius > 0:
        raise ArgumentError(f"Radius must be positive, got {radius}")
    net = circle_net(center, radius, radius, xaxis, yaxis, clockwise)
    return NurbsCurve(2, CIRCLE_KNOTS, net)


def rational_ellipse(
    center: Sequence[float] = (0.0, 0.0, 0.0),
    rx: float = 1.0,
    ry: float = 0.5,
    xaxis: Sequence[float] = (1.0, 0.0, 0.0),
    yaxis: Sequence[float] = (0.0, 1.0, 0.0),
) -> NurbsCurve:
    if not (rx > 0 and ry > 0):
        raise ArgumentError("Ellipse radii must be positive")
    return NurbsCurve(2, CIRCLE_KNOTS, circle_net(center, rx, ry, xaxis, yaxis))


def line(start: Sequence[float], end: Sequence[float]) -> NurbsCurve:
    """A degree one segment from start to end on [0, 1]."""
    points = np.array([start, end], dtype=float)
    return NurbsCurve.from_points(1, (0.0, 0.0, 1.0, 1.0), points)


def reverse_curve(curve: NurbsCurve) -> NurbsCurve:
    """The same point set traversed backwards over the same domain."""
    U = curve.knots
    knots = U[0] + U[-1] - U[::-1]
    return NurbsCurve(curve.degree, knots, curve.control_points[::-1])
