"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 18, 2026
"""

from .config import FinetuneSettings, ModelConfig, OptimizerSettings  # noqa: F401
from .model import (  # noqa: F401
    BatchTensors,
    Brep2ShapeNet,
    batch_tensors,
    build_model,
    parameter_count,
)
from .loss import (  # noqa: F401
    LossTerms,
    TargetTensors,
    masked_mse,
    pretrain_loss,
    target_tensors,
)
from .train import (  # noqa: F401
    GradcheckResult,
    TrainResult,
    compute_grad,
    evaluate_loss,
    gradcheck,
    load_checkpoint,
    save_checkpoint,
    train,
    write_trace,
)
from .finetune import (  # noqa: F401
    FinetuneModel,
    FinetuneResult,
    evaluate,
    finetune_head,
    predict,
)
