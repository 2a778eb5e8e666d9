"""Named wrappers over `op_apply`, one per op kind, plus composite helpers."""

from typing import Sequence

import numpy as np

from .ops import LOG_FLOOR
from .tensor import OpKind, Tensor, op_apply


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return op_apply(OpKind.MATMUL, [a, b])


def add(a: Tensor, b: Tensor) -> Tensor:
    return op_apply(OpKind.ADD, [a, b])


def subtract(a: Tensor, b: Tensor) -> Tensor:
    return op_apply(OpKind.ADD, [a, op_apply(OpKind.NEGATE, [b])])


def multiply(a: Tensor, b: Tensor) -> Tensor:
    return op_apply(OpKind.MULTIPLY, [a, b])


def scale(x: Tensor, factor: float) -> Tensor:
    return op_apply(OpKind.SCALE, [x], factor=float(factor))


def negate(x: Tensor) -> Tensor:
    return op_apply(OpKind.NEGATE, [x])


def exp(x: Tensor) -> Tensor:
    return op_apply(OpKind.EXP, [x])


def log(x: Tensor, floor: float = LOG_FLOOR) -> Tensor:
    """Natural log of max(x, floor); clamped entries get zero gradient."""
    return op_apply(OpKind.LOG, [x], floor=float(floor))


def relu(x: Tensor) -> Tensor:
    return op_apply(OpKind.RELU, [x])


def gelu(x: Tensor) -> Tensor:
    """Exact (erf-based) GELU."""
    return op_apply(OpKind.GELU, [x])


def row_mean(x: Tensor) -> Tensor:
    return op_apply(OpKind.ROW_MEAN, [x])


def row_variance(x: Tensor) -> Tensor:
    """Population variance of each row, L×1."""
    return op_apply(OpKind.ROW_VARIANCE, [x])


def row_logsumexp(x: Tensor) -> Tensor:
    return op_apply(OpKind.ROW_LOGSUMEXP, [x])


def sum(x: Tensor) -> Tensor:  # noqa: A001 - mirrors the op kind name
    return op_apply(OpKind.SUM, [x])


def mean(x: Tensor) -> Tensor:
    return op_apply(OpKind.MEAN, [x])


def transpose(x: Tensor) -> Tensor:
    return op_apply(OpKind.TRANSPOSE, [x])


def row_mask_select(x: Tensor, keep: np.ndarray) -> Tensor:
    """Keep the rows where `keep` is true; the mask itself is a constant."""
    return op_apply(OpKind.ROW_MASK_SELECT, [x], keep=np.asarray(keep, dtype=bool))


def concat_rows(tensors: Sequence[Tensor]) -> Tensor:
    return op_apply(OpKind.CONCAT_ROWS, list(tensors))


def conv1d(
    x: Tensor,
    weight: Tensor,
    kernel_width: int,
    stride: int = 1,
    padding: int = 0
) -> Tensor:
    """
    1-D convolution over the time (row) axis.

    Args:
        x: T_in×D_in input
        weight: (kernel_width·D_in)×D_out weight, frame-major rows
        kernel_width: Frames per window
        stride: Frame hop
        padding: Zero frames added at both ends

    Returns:
        L×D_out output with L = floor((T_in + 2·padding − kernel_width) / stride) + 1
    """
    return op_apply(
        OpKind.CONV1D, [x, weight], kernel_width=kernel_width, stride=stride, padding=padding
    )


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Row-wise standardization (population variance + eps), then gamma·x̂ + beta."""
    return op_apply(OpKind.LAYER_NORM, [x, gamma, beta], eps=float(eps))


def ctc_nll(log_probs: Tensor, target: Sequence[int], blank: int = 0) -> Tensor:
    """Negative log-likelihood of `target` under CTC, as a 1×1 tensor."""
    return op_apply(OpKind.CTC_NLL, [log_probs], target=tuple(int(t) for t in target), blank=blank)


def log_softmax_rows(x: Tensor) -> Tensor:
    return subtract(x, row_logsumexp(x))


def softmax_rows(x: Tensor) -> Tensor:
    return exp(log_softmax_rows(x))
