import numpy as np
import pytest
from brep2shape.components.api import (
    SOLID_KINDS,
    DecomposeSettings,
    decompose_model,
    generate_solid,
    sample_entity_points,
    tokenize_model,
)
from brep2shape.core.api import NurbsCurve, NurbsSurface

try:
    import torch  # noqa: F401

    TORCH_UNAVAILABLE = False
except ImportError:
    TORCH_UNAVAILABLE = True


def random_knots(rng, degree, n_ctrl):
    """Clamped knots on [0, 1] with random interior values."""
    interior = np.sort(rng.uniform(0.05, 0.95, n_ctrl - degree - 1))
    return np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])


def random_curve(rng, degree=3, n_ctrl=6, dim=3):
    """A rational curve with weights in [0.3, 3]."""
    pts = rng.uniform(-1, 1, (n_ctrl, dim))
    weights = rng.uniform(0.3, 3.0, n_ctrl)
    knots = random_knots(rng, degree, n_ctrl)
    return NurbsCurve.from_points(degree, knots, pts, weights)


def random_surface(rng, degree_u=2, degree_v=2, nu=4, nv=4):
    pts = rng.uniform(-1, 1, (nu, nv, 3))
    weights = rng.uniform(0.3, 3.0, (nu, nv))
    return NurbsSurface.from_points(
        degree_u,
        degree_v,
        random_knots(rng, degree_u, nu),
        random_knots(rng, degree_v, nv),
        pts,
        weights,
    )


def prepare(model, caps=(32, 8), m=3, settings=None):
    """Decompose, tokenize and sample one model."""
    decomposed = decompose_model(model, settings or DecomposeSettings())
    batch = tokenize_model(model, decomposed, caps)
    return batch, sample_entity_points(model, decomposed, m, caps)


@pytest.fixture
def rng():
    return np.random.default_rng(20260918)


@pytest.fixture(scope="session")
def solids():
    """One default solid per kind."""
    return {kind: generate_solid(kind) for kind in SOLID_KINDS}


@pytest.fixture(scope="session")
def decomposed(solids):
    return {kind: decompose_model(model) for kind, model in solids.items()}


@pytest.fixture
def tiny_config():
    """A network small enough for unit tests."""
    from brep2shape.net.config import ModelConfig

    return ModelConfig(
        width=16,
        tokenizer_layers=1,
        tokenizer_heads=2,
        dual_layers=2,
        dual_heads=2,
        ffn_expansion=2,
        face_cap=8,
        edge_cap=4,
    )
