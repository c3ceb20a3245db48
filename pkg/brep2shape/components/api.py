"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 14, 2026
"""

from .brep import (  # noqa: F401
    BrepModel,
    Edge,
    EdgeGraph,
    Face,
    FaceGraph,
    build_edge_graph,
    build_face_graph,
    edge_graph_from_face_graph,
    face_planarity_labels,
)
from .solids import SOLID_KINDS, generate_dataset, generate_solid  # noqa: F401
from .decompose import (  # noqa: F401
    curve_to_bezier_segments,
    elevate_segment_degree,
    elevate_triangle_degree,
    insert_knot,
    rectangle_to_triangles,
    restrict_rectangle,
    surface_to_bezier_rectangles,
    triangle_to_surface_params,
)
from .boundary import (  # noqa: F401
    BoundaryErrorReport,
    boundary_rmse,
    chord_to_arc,
    convergence_study,
    flatten_pcurve,
)
from .quadtree import QuadCell, quadtree_decompose  # noqa: F401
from .primitives import (  # noqa: F401
    DecomposedModel,
    DecomposeSettings,
    decompose_model,
)
from .sampling import (  # noqa: F401
    Frame,
    ShapeTargets,
    merge_targets,
    model_frame,
    sample_entity_points,
)
from .tokenize import (  # noqa: F401
    TokenBatch,
    detokenize_edge_primitive,
    detokenize_face_primitive,
    merge_batches,
    tokenize_model,
    tokenize_models,
)
