"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 18, 2026

Task heads on top of a pre-trained network.

"""

from __future__ import annotations

import logging
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np
import torch
from atom.api import Atom, Enum, Float, Int, List, Typed
from torch import Tensor, nn

from ..components.tokenize import TokenBatch, merge_batches
from ..core.errors import ArgumentError, IntegrityError, NumericError, TrainingError
from .config import FinetuneSettings
from .layers import check_finite, init_weights
from .model import BatchTensors, Brep2ShapeNet, batch_tensors, build_model

log = logging.getLogger(__name__)

TASKS = ("classify", "segment")

#: A tokenized model (or batch) with one label per model or per face
LabeledSample = tuple[TokenBatch, np.ndarray]


class FinetuneModel(nn.Module):
    """A backbone whose point heads are replaced by a linear classifier.

    Classification pools the face tokens of each model by their mean,
    segmentation classifies every face token.

    """

    def __init__(self, backbone: Brep2ShapeNet, task: str, n_classes: int):
        super().__init__()
        if task not in TASKS:
            raise ArgumentError(f"Unknown task '{task}', expected one of {TASKS}")
        if n_classes < 2:
            raise ArgumentError(f"At least 2 classes are needed, got {n_classes}")
        self.backbone = backbone
        self.task = task
        self.n_classes = n_classes
        self.head = nn.Linear(backbone.config.width, n_classes, dtype=torch.float64)
        init_weights(self.head)

    def forward(self, tensors: BatchTensors) -> Tensor:
        x_f, _ = self.backbone.encode(tensors)
        if self.task == "segment":
            return check_finite("logits", self.head(x_f))
        ids = tensors.face_model
        weights = nn.functional.one_hot(ids, tensors.n_models).T.to(x_f.dtype)
        pooled = weights @ x_f / weights.sum(1, keepdim=True).clamp(min=1.0)
        return check_finite("logits", self.head(pooled))

    def set_strategy(self, strategy: str):
        """Choose the trainable parameters: head, head and dual transformer, or all.

        The pre-training point heads never train.

        """
        for p in self.backbone.parameters():
            p.requires_grad_(strategy == "full")
        if strategy == "partial":
            for p in self.backbone.dual.parameters():
                p.requires_grad_(True)
        for head in (self.backbone.face_head, self.backbone.edge_head):
            head.requires_grad_(False)
        for p in self.head.parameters():
            p.requires_grad_(True)


class FinetuneResult(Atom):
    model = Typed(FinetuneModel)

    #: (step, loss) per optimizer step
    trace = List()

    strategy = Enum("full", "partial", "linear")

    #: Training set metrics after the last step
    accuracy = Float()
    mean_iou = Float()

    n_classes = Int()


# -----------------------------------------------------------------------------
# Metrics
# -----------------------------------------------------------------------------
def accuracy(pred: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(pred == labels)) if len(labels) else 0.0


def mean_iou(pred: np.ndarray, labels: np.ndarray, n_classes: int) -> float:
    """Intersection over union averaged over the classes that occur."""
    ious = []
    for c in range(n_classes):
        p, t = pred == c, labels == c
        union = np.count_nonzero(p | t)
        if union:
            ious.append(np.count_nonzero(p & t) / union)
    return float(np.mean(ious)) if ious else 0.0


# -----------------------------------------------------------------------------
# Training
# -----------------------------------------------------------------------------
def check_labels(batch: TokenBatch, labels: np.ndarray, task: str) -> np.ndarray:
    labels = np.asarray(labels)
    expected = batch.n_models if task == "classify" else batch.n_faces
    what = "model" if task == "classify" else "face"
    if labels.shape != (expected,):
        raise IntegrityError(
            f"Expected one label per {what} ({expected}), got shape {labels.shape}"
        )
    negative = len(labels) and labels.min() < 0
    if not np.issubdtype(labels.dtype, np.integer) or negative:
        raise IntegrityError("Labels must be non-negative integers")
    return labels.astype(np.int64)


class _Step(NamedTuple):
    tensors: BatchTensors
    labels: Tensor


def _prepare(dataset: Sequence[LabeledSample], size: int, task: str) -> list[_Step]:
    steps = []
    for i in range(0, len(dataset), size):
        items = dataset[i : i + size]
        batch = items[0][0] if len(items) == 1 else merge_batches([b for b, _ in items])
        labels = np.concatenate([check_labels(b, y, task) for b, y in items])
        steps.append(_Step(batch_tensors(batch), torch.from_numpy(labels)))
    return steps


def _cycle(steps: Sequence[_Step], shuffle: bool, seed: int) -> Iterator[_Step]:
    rng = np.random.default_rng(seed)
    while True:
        order = rng.permutation(len(steps)) if shuffle else range(len(steps))
        for i in order:
            yield steps[i]


def predict(model: FinetuneModel, batch: TokenBatch) -> np.ndarray:
    """Class per model (classify) or per face (segment)."""
    model.eval()
    with torch.no_grad():
        return model(batch_tensors(batch)).argmax(-1).numpy()


def evaluate(
    model: FinetuneModel, dataset: Sequence[LabeledSample]
) -> tuple[float, float]:
    """Accuracy and mean IoU over a labeled dataset."""
    preds, labels = [], []
    for batch, y in dataset:
        labels.append(check_labels(batch, y, model.task))
        preds.append(predict(model, batch))
    pred, truth = np.concatenate(preds), np.concatenate(labels)
    return accuracy(pred, truth), mean_iou(pred, truth, model.n_classes)


def finetune_head(
    backbone: Brep2ShapeNet,
    task: str,
    dataset: Sequence[LabeledSample],
    settings: Optional[FinetuneSettings] = None,
    n_classes: Optional[int] = None,
    seed: int = 0,
) -> FinetuneResult:
    """Replace the point heads by a classifier and train it.

    Parameters
    ----------
    backbone: Brep2ShapeNet
        The pre-trained network, it is copied and never modified.
    task: str
        "classify" with one label per model or "segment" with one per face.
    dataset: list of (TokenBatch, labels)
        Labeled models.
    settings: FinetuneSettings
        Strategy, optimizer and step count.
    n_classes: int
        Defaults to the largest label plus one.
    seed: int
        Seeds the head initialization and the shuffling.

    """
    settings = (settings or FinetuneSettings()).validate()
    if not dataset:
        raise ArgumentError("The dataset is empty")
    if task not in TASKS:
        raise ArgumentError(f"Unknown task '{task}', expected one of {TASKS}")
    if settings.steps < 1:
        raise ArgumentError(f"steps must be positive, got {settings.steps}")
    steps = _prepare(dataset, min(settings.batch_size, len(dataset)), task)
    if n_classes is None:
        largest = max(int(s.labels.max()) for s in steps if len(s.labels))
        n_classes = max(2, largest + 1)

    copy = build_model(backbone.config)
    copy.load_state_dict(backbone.state_dict())
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = FinetuneModel(copy, task, n_classes)
    model.set_strategy(settings.strategy)
    model.train()
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(
        trainable,
        lr=settings.lr,
        betas=(settings.beta1, settings.beta2),
        weight_decay=settings.weight_decay,
    )
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=settings.steps
    )
    log.info(
        "Fine-tuning '%s' (%s) with %d trainable parameter(s)",
        task,
        settings.strategy,
        sum(p.numel() for p in trainable),
    )

    trace = []
    batches = _cycle(steps, settings.shuffle, seed)
    for step in range(settings.steps):
        item = next(batches)
        optimizer.zero_grad(set_to_none=True)
        try:
            loss = nn.functional.cross_entropy(model(item.tensors), item.labels)
            check_finite("loss", loss).backward()
        except TrainingError:
            raise
        except NumericError as e:
            raise TrainingError(f"Diverged: {e}", step) from e
        optimizer.step()
        scheduler.step()
        trace.append((step, loss.item()))
        log.debug("step %d loss %.6g", step, loss.item())

    acc, iou = evaluate(model, dataset)
    log.info("Fine-tuned '%s': accuracy %.3f, mean IoU %.3f", task, acc, iou)
    return FinetuneResult(
        model=model,
        trace=trace,
        strategy=settings.strategy,
        accuracy=acc,
        mean_iou=iou,
        n_classes=n_classes,
    )
