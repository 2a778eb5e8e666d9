"""SUTA objectives and the CTC loss."""

from .suta import (
    EntropyNorm,
    FrameMask,
    LossBreakdown,
    ProbMatrix,
    blank_mask,
    combined_loss,
    entropy_loss,
    mcc_loss,
    softmax_temperature,
)
from .ctc import ctc_alignments, ctc_feasible, ctc_loss

__all__ = [
    "EntropyNorm",
    "FrameMask",
    "LossBreakdown",
    "ProbMatrix",
    "blank_mask",
    "combined_loss",
    "entropy_loss",
    "mcc_loss",
    "softmax_temperature",
    "ctc_alignments",
    "ctc_feasible",
    "ctc_loss",
]
