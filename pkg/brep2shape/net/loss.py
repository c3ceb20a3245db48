"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 16, 2026
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import torch
from torch import Tensor

from ..components.sampling import ShapeTargets
from ..core.errors import IntegrityError
from .config import ModelConfig
from .layers import check_finite


class TargetTensors(NamedTuple):
    face_points: Tensor
    face_mask: Tensor
    edge_points: Tensor
    edge_mask: Tensor


class LossTerms(NamedTuple):
    total: Tensor
    face: Tensor
    edge: Tensor


def _tensor(a: np.ndarray, dtype) -> Tensor:
    return torch.from_numpy(np.array(a, dtype=dtype))


def target_tensors(targets: ShapeTargets) -> TargetTensors:
    return TargetTensors(
        face_points=_tensor(targets.face_points, np.float64),
        face_mask=_tensor(targets.face_mask, bool),
        edge_points=_tensor(targets.edge_points, np.float64),
        edge_mask=_tensor(targets.edge_mask, bool),
    )


def masked_mse(pred: Tensor, target: Tensor, mask: Tensor, what: str = "") -> Tensor:
    """Mean over entities of the squared error averaged over valid slots.

    Entities without a valid slot do not count. Padded slots contribute
    exactly zero whatever the prediction holds.

    """
    if pred.shape != target.shape or pred.shape[:-1] != mask.shape:
        raise IntegrityError(
            f"{what or 'Prediction'} of shape {tuple(pred.shape)} does not match "
            f"the target {tuple(target.shape)} with mask {tuple(mask.shape)}"
        )
    sq = ((pred - target) ** 2).sum(-1)
    sq = torch.where(mask, sq, torch.zeros_like(sq))
    counts = mask.sum(-1)
    valid = counts > 0
    if not bool(valid.any()):
        return sq.sum() * 0.0
    per_entity = sq.sum(-1)[valid] / counts[valid].to(sq.dtype)
    return per_entity.mean()


def pretrain_loss(
    face_pred: Tensor, edge_pred: Tensor, targets: TargetTensors, config: ModelConfig
) -> LossTerms:
    """Face and edge reconstruction terms and their sum."""
    face = masked_mse(
        face_pred, targets.face_points, targets.face_mask, "Face prediction"
    )
    face = check_finite("loss.face", face)
    if config.edge_supervision:
        edge = masked_mse(
            edge_pred, targets.edge_points, targets.edge_mask, "Edge prediction"
        )
        edge = check_finite("loss.edge", edge)
    else:
        edge = face.new_zeros(())
    return LossTerms(face + edge, face, edge)
