"""Minimal reverse-mode differentiation over dense 2-D matrices."""

from .tensor import Graph, Node, OpKind, Tensor, backward, op_apply
from .ops import conv_output_length, ctc_forward_backward, min_ctc_frames
from . import functional

__all__ = [
    "Graph",
    "Node",
    "OpKind",
    "Tensor",
    "backward",
    "op_apply",
    "conv_output_length",
    "ctc_forward_backward",
    "min_ctc_frames",
    "functional",
]
