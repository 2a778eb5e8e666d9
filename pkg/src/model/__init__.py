"""Toy CTC acoustic model."""

from .config import ModelConfig, ParamSelection
from .network import (
    ForwardPass,
    ModelState,
    forward,
    init_model,
    output_length,
    parameter_digest,
    parameter_shapes,
    partition_params,
    predict_logits,
    restore,
    snapshot,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .training import TrainingLog, evaluate_wer, train_source

__all__ = [
    "ModelConfig",
    "ParamSelection",
    "ForwardPass",
    "ModelState",
    "forward",
    "init_model",
    "output_length",
    "parameter_digest",
    "parameter_shapes",
    "partition_params",
    "predict_logits",
    "restore",
    "snapshot",
    "load_checkpoint",
    "save_checkpoint",
    "TrainingLog",
    "evaluate_wer",
    "train_source",
]
