"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 17, 2026

Pre-training loop, gradients, checkpoints and the finite difference check.

"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import OrderedDict
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np
import torch
from atom.api import Atom, Float, Int, List, Typed
from torch import Tensor, nn

from ..components.primitives import DecomposeSettings, decompose_model
from ..components.sampling import ShapeTargets, merge_targets, sample_entity_points
from ..components.solids import generate_solid
from ..components.tokenize import TokenBatch, merge_batches, tokenize_model
from ..core.errors import ArgumentError, IntegrityError, NumericError, TrainingError
from ..impl.binary import read_checkpoint, write_checkpoint
from ..impl.files import PathType, atomic_write
from ..impl.lxml_model import config_from_string, config_to_string
from .config import ModelConfig, OptimizerSettings
from .layers import check_finite
from .loss import LossTerms, TargetTensors, pretrain_loss, target_tensors
from .model import BatchTensors, Brep2ShapeNet, batch_tensors, build_model

log = logging.getLogger(__name__)

#: A tokenized model with its point targets
Sample = tuple[TokenBatch, ShapeTargets]

CONFIG_TAG = "model-config"


class TracePoint(NamedTuple):
    step: int
    total: float
    face: float
    edge: float


class TrainResult(Atom):
    #: The trained network
    model = Typed(nn.Module)

    #: One point per optimizer step
    trace = List()

    #: Dataset mean loss before and after training
    initial_loss = Float()
    final_loss = Float()

    seed = Int()


def compute_loss(
    model: Brep2ShapeNet,
    tensors: BatchTensors,
    targets: TargetTensors,
    config: ModelConfig,
) -> LossTerms:
    face_pred, edge_pred = model(tensors)
    return pretrain_loss(face_pred, edge_pred, targets, config)


def compute_grad(
    model: Brep2ShapeNet, batch: TokenBatch, targets: ShapeTargets, scale: float = 1.0
) -> OrderedDict[str, Tensor]:
    """Gradient of the scaled total loss for every parameter, in registration order.

    Parameters the loss does not depend on get an exact zero.

    """
    model.zero_grad(set_to_none=True)
    tensors, target = batch_tensors(batch), target_tensors(targets)
    terms = compute_loss(model, tensors, target, model.config)
    (terms.total * scale).backward()
    grads: OrderedDict[str, Tensor] = OrderedDict()
    for name, p in model.named_parameters():
        g = torch.zeros_like(p) if p.grad is None else p.grad.detach().clone()
        grads[name] = check_finite(f"grad.{name}", g)
    model.zero_grad(set_to_none=True)
    return grads


def evaluate_loss(model: Brep2ShapeNet, dataset: Sequence[Sample]) -> float:
    """Mean total loss over the samples of a dataset."""
    if not dataset:
        raise ArgumentError("The dataset is empty")
    losses = []
    with torch.no_grad():
        for batch, targets in dataset:
            tensors, target = batch_tensors(batch), target_tensors(targets)
            terms = compute_loss(model, tensors, target, model.config)
            losses.append(terms.total.item())
    return float(np.mean(losses))


def _chunk(
    dataset: Sequence[Sample], indices: Sequence[int]
) -> tuple[BatchTensors, TargetTensors]:
    items = [dataset[i] for i in indices]
    batch = items[0][0] if len(items) == 1 else merge_batches([b for b, _ in items])
    targets = items[0][1] if len(items) == 1 else merge_targets([t for _, t in items])
    if (targets.n_faces, targets.n_edges) != (batch.n_faces, batch.n_edges):
        raise IntegrityError("Targets and token batch hold different entity counts")
    return batch_tensors(batch), target_tensors(targets)


def _batches(
    dataset: Sequence[Sample], settings: OptimizerSettings, seed: int
) -> Iterator[tuple[BatchTensors, TargetTensors]]:
    """Endless stream of merged batches, in a fixed or seeded shuffled order."""
    n = len(dataset)
    size = min(settings.batch_size, n)
    if not settings.shuffle:
        chunks = [
            _chunk(dataset, range(i, min(i + size, n))) for i in range(0, n, size)
        ]
        while True:
            yield from chunks
    rng = np.random.default_rng(seed)
    while True:
        order = rng.permutation(n)
        for i in range(0, n, size):
            yield _chunk(dataset, order[i : i + size].tolist())


def train(
    dataset: Sequence[Sample],
    config: ModelConfig,
    settings: Optional[OptimizerSettings] = None,
    steps: int = 200,
    seed: int = 0,
    model: Optional[Brep2ShapeNet] = None,
    checkpoint: Optional[PathType] = None,
) -> TrainResult:
    """Pre-train with AdamW and a cosine schedule.

    Parameters
    ----------
    dataset: list of (TokenBatch, ShapeTargets)
        One entry per model.
    config: ModelConfig
        Network sizes and switches.
    settings: OptimizerSettings
        Optimizer and batching.
    steps: int
        Optimizer steps.
    seed: int
        Seeds the initialization and the shuffling.
    model: Brep2ShapeNet
        Continue from this network instead of a fresh one.
    checkpoint: path
        Where to save the trained network.

    Returns
    -------
    result: TrainResult
        The network, the per step loss trace and the dataset losses.

    """
    if not dataset:
        raise ArgumentError("The dataset is empty")
    if steps < 1:
        raise ArgumentError(f"steps must be positive, got {steps}")
    settings = (settings or OptimizerSettings()).validate()
    config.validate()
    if model is None:
        model = build_model(config, seed)
    model.train()

    optimizer = torch.optim.AdamW(
        [p for p in model.parameters() if p.requires_grad],
        lr=settings.lr,
        betas=(settings.beta1, settings.beta2),
        weight_decay=settings.weight_decay,
    )
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=steps)
    initial = evaluate_loss(model, dataset)
    log.info(
        "Training %d step(s) on %d model(s), initial loss %.6g",
        steps,
        len(dataset),
        initial,
    )

    trace = []
    batches = _batches(dataset, settings, seed)
    for step in range(steps):
        tensors, targets = next(batches)
        optimizer.zero_grad(set_to_none=True)
        try:
            terms = compute_loss(model, tensors, targets, config)
            terms.total.backward()
        except TrainingError:
            raise
        except NumericError as e:
            raise TrainingError(f"Diverged: {e}", step) from e
        optimizer.step()
        scheduler.step()
        point = TracePoint(
            step, terms.total.item(), terms.face.item(), terms.edge.item()
        )
        trace.append(point)
        log.debug("step %d loss %.6g (face %.6g, edge %.6g)", *point)
        if settings.log_every and (step + 1) % settings.log_every == 0:
            log.info("step %d/%d loss %.6g", step + 1, steps, point.total)

    final = evaluate_loss(model, dataset)
    if not math.isfinite(final):
        raise TrainingError("Non-finite final loss", steps)
    ratio = final / initial if initial else 0.0
    log.info("Final loss %.6g (%.3g of the initial loss)", final, ratio)
    if checkpoint is not None:
        save_checkpoint(model, seed, checkpoint)
    return TrainResult(
        model=model, trace=trace, initial_loss=initial, final_loss=final, seed=seed
    )


# -----------------------------------------------------------------------------
# Persistence
# -----------------------------------------------------------------------------
def trace_to_csv(trace: Sequence[TracePoint]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TracePoint._fields)
    for point in trace:
        writer.writerow([point.step, *map(repr, point[1:])])
    return out.getvalue().encode("utf-8")


def write_trace(trace: Sequence[TracePoint], path: PathType):
    atomic_write(path, trace_to_csv(trace))


def save_checkpoint(model: Brep2ShapeNet, seed: int, path: PathType):
    tensors = OrderedDict(
        (name, p.detach().cpu().numpy()) for name, p in model.state_dict().items()
    )
    write_checkpoint(tensors, config_to_string(model.config, CONFIG_TAG), seed, path)


def load_checkpoint(path: PathType) -> tuple[Brep2ShapeNet, int]:
    """The network stored at `path` and its initialization seed."""
    ckpt = read_checkpoint(path)
    config = config_from_string(ModelConfig, ckpt.config, CONFIG_TAG)
    model = build_model(config, ckpt.seed)
    state = model.state_dict()
    if list(state) != list(ckpt.tensors):
        missing = sorted(set(state) ^ set(ckpt.tensors))
        raise IntegrityError(
            f"Checkpoint tensors do not match the configuration: {missing}"
        )
    for name, value in ckpt.tensors.items():
        if tuple(state[name].shape) != value.shape:
            expected = tuple(state[name].shape)
            raise IntegrityError(
                f"Tensor '{name}' has shape {value.shape}, expected {expected}"
            )
    loaded = ((k, torch.from_numpy(np.array(v))) for k, v in ckpt.tensors.items())
    model.load_state_dict(OrderedDict(loaded))
    return model, ckpt.seed


# -----------------------------------------------------------------------------
# Gradient check
# -----------------------------------------------------------------------------
class GradcheckResult(Atom):
    #: Parameter entries that were checked, as (name, flat index)
    entries = List()

    #: Relative error of every entry
    errors = List()

    tolerance = Float(1e-4)

    @property
    def max_error(self) -> float:
        return max(self.errors, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def toy_sample(config: ModelConfig) -> Sample:
    """The two face hinge, tokenized and sampled with the caps of `config`."""
    model = generate_solid("hinge")
    settings = DecomposeSettings(
        curve_degree=config.curve_degree, triangle_degree=config.triangle_degree
    )
    decomposed = decompose_model(model, settings)
    caps = (config.face_cap, config.edge_cap)
    batch = tokenize_model(model, decomposed, caps)
    targets = sample_entity_points(model, decomposed, config.points_per_primitive, caps)
    return batch, targets


def toy_config(**kwargs) -> ModelConfig:
    """Small network for the gradient check."""
    defaults = dict(
        width=8,
        tokenizer_layers=1,
        tokenizer_heads=2,
        dual_layers=1,
        dual_heads=2,
        ffn_expansion=2,
        face_cap=4,
        edge_cap=2,
    )
    defaults.update(kwargs)
    return ModelConfig(**defaults)


def gradcheck(
    seed: int = 0,
    samples: int = 50,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    config: Optional[ModelConfig] = None,
) -> GradcheckResult:
    """Compare backpropagated and central difference gradients.

    Every parameter is redrawn from N(0, 0.1^2) first so that zero initialized
    projections take part.

    """
    config = config or toy_config()
    batch, targets = toy_sample(config)
    model = build_model(config, seed)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.randn(p.shape, generator=gen, dtype=p.dtype) * 0.1)

    grads = compute_grad(model, batch, targets)
    tensors, target = batch_tensors(batch), target_tensors(targets)
    params = dict(model.named_parameters())
    flat = [(name, i) for name, p in params.items() for i in range(p.numel())]
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(flat), size=min(samples, len(flat)), replace=False)

    def loss() -> float:
        return compute_loss(model, tensors, target, config).total.item()

    entries, errors = [], []
    with torch.no_grad():
        for k in sorted(picks.tolist()):
            name, i = flat[k]
            view = params[name].view(-1)
            orig = view[i].item()
            view[i] = orig + step
            plus = loss()
            view[i] = orig - step
            minus = loss()
            view[i] = orig
            numeric = (plus - minus) / (2 * step)
            analytic = grads[name].view(-1)[i].item()
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
            entries.append((name, i))
            errors.append(err)
            log.debug(
                "%s[%d] analytic %.6g numeric %.6g error %.3g",
                name,
                i,
                analytic,
                numeric,
                err,
            )
    result = GradcheckResult(entries=entries, errors=errors, tolerance=tolerance)
    log.info(
        "Gradient check over %d entries: max relative error %.3g",
        len(errors),
        result.max_error,
    )
    return result
