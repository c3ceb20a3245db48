"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 15, 2026
"""

from __future__ import annotations

from atom.api import Atom, Bool, Enum, Float, Int

from ..core.errors import ConfigError


class ModelConfig(Atom):
    """Sizes and ablation switches of the network.

    Members tagged with config=True are persisted with checkpoints.

    """

    #: Hidden width C of every token
    width = Int(128).tag(config=True)

    #: Primitive tokenizer encoders
    tokenizer_layers = Int(3).tag(config=True)
    tokenizer_heads = Int(4).tag(config=True)

    #: Dual transformer
    dual_layers = Int(6).tag(config=True)
    dual_heads = Int(4).tag(config=True)

    #: Feed forward hidden size as a multiple of the width
    ffn_expansion = Int(4).tag(config=True)

    #: Points predicted per primitive
    points_per_primitive = Int(3).tag(config=True)

    #: Primitive slots per face and per edge
    face_cap = Int(32).tag(config=True)
    edge_cap = Int(8).tag(config=True)

    #: Standardized primitive degrees, they fix the input sizes
    triangle_degree = Int(6).tag(config=True)
    curve_degree = Int(3).tag(config=True)

    #: Supervise edge point predictions
    edge_supervision = Bool(True).tag(config=True)

    #: Topology biased or plain attention in the dual transformer
    attention_mode = Enum("topology", "standard").tag(config=True)

    #: Two biased streams, the face stream alone, or one encoder over both
    streams = Enum("dual", "face_only", "merged").tag(config=True)

    #: Learnable position embedding over primitive slots
    primitive_positions = Bool(False).tag(config=True)

    @property
    def triangle_points(self) -> int:
        d = self.triangle_degree
        return (d + 1) * (d + 2) // 2

    @property
    def segment_points(self) -> int:
        return self.curve_degree + 1

    @property
    def face_slots(self) -> int:
        return self.face_cap * self.points_per_primitive

    @property
    def edge_slots(self) -> int:
        return self.edge_cap * self.points_per_primitive

    def validate(self, allow_empty: bool = False) -> ModelConfig:
        """Raise a `ConfigError` on inconsistent sizes.

        `allow_empty` admits a dual transformer without layers.

        """
        sizes = {
            "width": self.width,
            "tokenizer_layers": self.tokenizer_layers,
            "tokenizer_heads": self.tokenizer_heads,
            "dual_heads": self.dual_heads,
            "ffn_expansion": self.ffn_expansion,
            "points_per_primitive": self.points_per_primitive,
            "face_cap": self.face_cap,
            "edge_cap": self.edge_cap,
            "triangle_degree": self.triangle_degree,
            "curve_degree": self.curve_degree,
        }
        for name, value in sizes.items():
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.dual_layers < (0 if allow_empty else 1):
            raise ConfigError(f"dual_layers must be at least 1, got {self.dual_layers}")
        for name in ("tokenizer_heads", "dual_heads"):
            heads = getattr(self, name)
            if self.width % heads:
                raise ConfigError(
                    f"width {self.width} is not divisible by {name} {heads}"
                )
        return self


class OptimizerSettings(Atom):
    """AdamW with cosine decay."""

    lr = Float(1e-4).tag(config=True)
    weight_decay = Float(0.01).tag(config=True)
    beta1 = Float(0.9).tag(config=True)
    beta2 = Float(0.999).tag(config=True)

    #: Models per step
    batch_size = Int(16).tag(config=True)

    #: Seeded reshuffle of the dataset every epoch
    shuffle = Bool(False).tag(config=True)

    #: Steps between info level progress logs
    log_every = Int(50)

    def validate(self) -> OptimizerSettings:
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("Learning rate and weight decay must not be negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Betas must lie in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        return self


class FinetuneSettings(OptimizerSettings):
    """Fine-tuning: which parameters train and how long."""

    #: head only, head plus dual transformer, or everything
    strategy = Enum("full", "partial", "linear").tag(config=True)

    lr = Float(2e-4).tag(config=True)

    batch_size = Int(32).tag(config=True)

    steps = Int(300).tag(config=True)
