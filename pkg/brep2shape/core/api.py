"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 14, 2026
"""

from .errors import *  # noqa: F401,F403
from .geom import (  # noqa: F401
    CIRCLE_KNOTS,
    HomogeneousPoint,
    KnotVector,
    NurbsCurve,
    NurbsSurface,
    TrimLoop,
    as_homogeneous,
    bernstein,
    bernstein_basis,
    bspline_basis,
    dehomogenize,
    eval_curve,
    eval_surface,
    line,
    rational_circle,
    rational_ellipse,
    reverse_curve,
)
from .bezier import (  # noqa: F401
    BezierRectangle,
    BezierSegment,
    BezierTriangle,
    eval_bezier_rectangle,
    eval_bezier_segment,
    eval_bezier_triangle,
    segment_from_points,
    triangle_basis,
    triangle_indices,
)
