"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 16, 2026

Primitive tokenizers, the dual transformer and the point prediction heads.

"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
import torch
from torch import Tensor, nn

from ..components.tokenize import TokenBatch
from ..core.errors import IntegrityError
from .config import ModelConfig
from .layers import (
    EncoderBlock,
    TopologyAttentionBlock,
    TopologyBias,
    check_finite,
    init_weights,
    trunc_normal_,
)


class BatchTensors(NamedTuple):
    """Torch views of a `TokenBatch`."""

    face_tensor: Tensor
    face_mask: Tensor
    edge_tensor: Tensor
    edge_mask: Tensor
    face_adjacency: Tensor
    edge_adjacency: Tensor
    face_model: Tensor
    edge_model: Tensor

    @property
    def n_models(self) -> int:
        ids = torch.cat([self.face_model, self.edge_model])
        return int(ids.max()) + 1 if len(ids) else 0


def batch_tensors(batch: TokenBatch) -> BatchTensors:
    def f8(a: np.ndarray) -> Tensor:
        return torch.from_numpy(np.ascontiguousarray(a, dtype=np.float64))

    def i8(a: np.ndarray) -> Tensor:
        return torch.from_numpy(np.ascontiguousarray(a, dtype=np.int64))

    return BatchTensors(
        face_tensor=f8(batch.face_tensor),
        face_mask=torch.from_numpy(np.ascontiguousarray(batch.face_mask, dtype=bool)),
        edge_tensor=f8(batch.edge_tensor),
        edge_mask=torch.from_numpy(np.ascontiguousarray(batch.edge_mask, dtype=bool)),
        face_adjacency=i8(batch.face_adjacency),
        edge_adjacency=i8(batch.edge_adjacency),
        face_model=i8(batch.face_model),
        edge_model=i8(batch.edge_model),
    )


def same_model(ids: Tensor) -> Tensor:
    """Block diagonal mask of token pairs belonging to one model."""
    return ids[:, None] == ids[None, :]


# -----------------------------------------------------------------------------
# Tokenizers
# -----------------------------------------------------------------------------
class PrimitiveEmbedding(nn.Module):
    """Two layer perceptron over the flattened n x 4 control points."""

    def __init__(self, n_points: int, width: int):
        super().__init__()
        self.n_points = n_points
        self.fc1 = nn.Linear(n_points * 4, width)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(width, width)

    def forward(self, tensor: Tensor, mask: Tensor) -> Tensor:
        shape = tuple(tensor.shape)
        expected = (self.n_points, 4)
        if len(shape) != 4 or shape[2:] != expected or tuple(mask.shape) != shape[:2]:
            raise IntegrityError(
                f"Expected primitives of shape (E, S, {self.n_points}, 4) "
                "with an (E, S) mask, "
                f"got {tuple(tensor.shape)} and {tuple(mask.shape)}"
            )
        x = self.fc2(self.act(self.fc1(tensor.flatten(2))))
        return x * mask.unsqueeze(-1).to(x.dtype)


class EntityEncoder(nn.Module):
    """Encoder over [aggregate; primitives], read at the aggregate token.

    Masked slots are excluded as attention keys.

    """

    def __init__(self, config: ModelConfig, cap: int):
        super().__init__()
        width = config.width
        self.aggregate = nn.Parameter(torch.zeros(width))
        self.positions = None
        if config.primitive_positions:
            self.positions = nn.Parameter(torch.zeros(cap, width))
        self.blocks = nn.ModuleList(
            EncoderBlock(width, config.tokenizer_heads, config.ffn_expansion)
            for _ in range(config.tokenizer_layers)
        )
        self.norm = nn.LayerNorm(width)

    def reset_parameters(self):
        trunc_normal_(self.aggregate)
        if self.positions is not None:
            trunc_normal_(self.positions)

    def forward(self, embeddings: Tensor, mask: Tensor) -> Tensor:
        n, cap, width = embeddings.shape
        if not bool(mask.any(dim=1).all()):
            empty = torch.nonzero(~mask.any(dim=1)).flatten().tolist()
            raise IntegrityError(f"Entities {empty} have no valid primitive")
        if self.positions is not None:
            if cap > len(self.positions):
                raise IntegrityError(
                    f"{cap} primitive slots exceed the "
                    f"{len(self.positions)} position embeddings"
                )
            keep = mask.unsqueeze(-1).to(embeddings.dtype)
            embeddings = embeddings + self.positions[:cap] * keep
        x = torch.cat([self.aggregate.expand(n, 1, width), embeddings], dim=1)
        keys = torch.cat([mask.new_ones(n, 1), mask], dim=1).unsqueeze(1)
        for block in self.blocks:
            x = block(x, allowed=keys)
        return self.norm(x[:, 0])


# -----------------------------------------------------------------------------
# Dual transformer
# -----------------------------------------------------------------------------
class DualTransformer(nn.Module):
    """Face and edge streams, each biased by the other's previous layer."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.streams = config.streams
        self.topology = config.attention_mode == "topology"
        args = (config.width, config.dual_heads, config.ffn_expansion)
        L = config.dual_layers
        if self.streams == "merged":
            self.merged = nn.ModuleList(EncoderBlock(*args) for _ in range(L))
        else:
            blocks = (TopologyAttentionBlock(*args) for _ in range(L))
            self.face_layers = nn.ModuleList(blocks)
            if self.streams == "dual":
                blocks = (TopologyAttentionBlock(*args) for _ in range(L))
                self.edge_layers = nn.ModuleList(blocks)

    def forward(
        self, x_f: Tensor, x_e: Tensor, tensors: BatchTensors
    ) -> tuple[Tensor, Tensor]:
        nf, ne = len(x_f), len(x_e)
        for name, adj, n, m in (
            ("face", tensors.face_adjacency, nf, ne),
            ("edge", tensors.edge_adjacency, ne, nf),
        ):
            if not len(adj):
                continue
            pairs, shared = adj[:, :2], adj[:, 2]
            low = min(int(pairs.min()), int(shared.min()))
            if low < 0 or int(pairs.max()) >= n or int(shared.max()) >= m:
                raise IntegrityError(f"The {name} adjacency holds indices out of range")

        if self.streams == "merged":
            x = torch.cat([x_f, x_e])
            allowed = same_model(torch.cat([tensors.face_model, tensors.edge_model]))
            for block in self.merged:
                x = block(x, allowed=allowed)
                check_finite("dual.merged", x)
            return x[:nf], x[nf:]

        face_allowed = same_model(tensors.face_model)
        if self.streams == "face_only":
            for layer in self.face_layers:
                x_f = check_finite("dual.face", layer(x_f, None, None, face_allowed))
            return x_f, x_e

        edge_allowed = same_model(tensors.edge_model)
        face_adj = tensors.face_adjacency if self.topology else None
        edge_adj = tensors.edge_adjacency if self.topology else None
        for face_layer, edge_layer in zip(self.face_layers, self.edge_layers):
            # Both streams read the complement from the previous layer
            f = face_layer(x_f, x_e, face_adj, face_allowed)
            e = edge_layer(x_e, x_f, edge_adj, edge_allowed)
            x_f, x_e = check_finite("dual.face", f), check_finite("dual.edge", e)
        return x_f, x_e


# -----------------------------------------------------------------------------
# Network
# -----------------------------------------------------------------------------
class Brep2ShapeNet(nn.Module):
    """Tokenizers, dual transformer and linear point heads."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        config.validate(allow_empty=True)
        self.config = config
        C = config.width
        self.face_embed = PrimitiveEmbedding(config.triangle_points, C)
        self.edge_embed = PrimitiveEmbedding(config.segment_points, C)
        self.face_encoder = EntityEncoder(config, config.face_cap)
        self.edge_encoder = EntityEncoder(config, config.edge_cap)
        self.dual = DualTransformer(config)
        self.face_head = nn.Linear(C, config.face_slots * 3)
        self.edge_head = nn.Linear(C, config.edge_slots * 3)
        self.reset_parameters()

    def reset_parameters(self):
        self.apply(init_weights)
        for module in self.modules():
            if isinstance(module, (EntityEncoder, TopologyBias)):
                module.reset_parameters()

    def tokenize(self, tensors: BatchTensors) -> tuple[Tensor, Tensor]:
        """Entity tokens x^0 of both streams."""
        emb_f = self.face_embed(tensors.face_tensor, tensors.face_mask)
        emb_e = self.edge_embed(tensors.edge_tensor, tensors.edge_mask)
        check_finite("embed.face", emb_f)
        check_finite("embed.edge", emb_e)
        x_f = check_finite("tokens.face", self.face_encoder(emb_f, tensors.face_mask))
        x_e = check_finite("tokens.edge", self.edge_encoder(emb_e, tensors.edge_mask))
        return x_f, x_e

    def encode(self, tensors: BatchTensors) -> tuple[Tensor, Tensor]:
        """Final face and edge tokens."""
        x_f, x_e = self.tokenize(tensors)
        return self.dual(x_f, x_e, tensors)

    def forward(self, tensors: BatchTensors) -> tuple[Tensor, Tensor]:
        """Predicted points, shapes (N_f, face_slots, 3) and (N_e, edge_slots, 3)."""
        x_f, x_e = self.encode(tensors)
        face = self.face_head(x_f).reshape(len(x_f), self.config.face_slots, 3)
        edge = self.edge_head(x_e).reshape(len(x_e), self.config.edge_slots, 3)
        return check_finite("pred.face", face), check_finite("pred.edge", edge)


def build_model(config: ModelConfig, seed: int = 0) -> Brep2ShapeNet:
    """A float64 network initialized from `seed` without touching the global RNG."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = Brep2ShapeNet(config)
    return model.to(torch.float64)


def parameter_count(model: nn.Module, trainable: Optional[bool] = None) -> int:
    return sum(
        p.numel()
        for p in model.parameters()
        if trainable is None or p.requires_grad == trainable
    )
