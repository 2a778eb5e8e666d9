"""Kernel registry: forward and vector-Jacobian product for every op kind.

Elementwise binary kernels broadcast a 1×D row vector, an L×1 column vector
or a 1×1 scalar against an L×D operand; their backward rules sum-reduce the
upstream gradient over the broadcast axes.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf, logsumexp

from ..utils.errors import ContractViolation, DataError
from .tensor import OpKind

Arrays = Sequence[np.ndarray]
Grads = List[Optional[np.ndarray]]

LOG_FLOOR = 1e-12
_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Kernel:
    """Shape check, forward and backward rule of one op kind."""

    check: Callable[[Arrays, Dict[str, Any]], None]
    forward: Callable[[Arrays, Dict[str, Any]], Tuple[np.ndarray, Dict[str, Any]]]
    backward: Callable[..., Grads]


_KERNELS: Dict[OpKind, Kernel] = {}


def register(kind: OpKind, check, forward, backward) -> None:
    _KERNELS[kind] = Kernel(check=check, forward=forward, backward=backward)


def get_kernel(kind: OpKind) -> Kernel:
    try:
        return _KERNELS[kind]
    except KeyError:
        raise ContractViolation(f"No kernel registered for {kind}") from None


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum-reduce `grad` over the axes that were broadcast up from `shape`."""
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: tuple, b: tuple, kind: str) -> tuple:
    out = []
    for da, db in zip(a, b):
        if da == db or db == 1:
            out.append(da)
        elif da == 1:
            out.append(db)
        else:
            raise ContractViolation(f"{kind}: shapes {a} and {b} do not broadcast")
    return tuple(out)


def _arity(n: int):
    def check(arrays: Arrays, attrs: Dict[str, Any]) -> None:
        if len(arrays) != n:
            raise ContractViolation(f"expected {n} input(s), got {len(arrays)}")
    return check


# -- binary ---------------------------------------------------------------

def _check_matmul(arrays, attrs):
    _arity(2)(arrays, attrs)
    a, b = arrays
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")


def _fwd_matmul(arrays, attrs):
    a, b = arrays
    return a @ b, {}


def _bwd_matmul(g, arrays, out, cache, attrs, needs):
    a, b = arrays
    return [g @ b.T if needs[0] else None, a.T @ g if needs[1] else None]


def _check_elementwise(arrays, attrs):
    _arity(2)(arrays, attrs)
    _broadcast_shape(arrays[0].shape, arrays[1].shape, "elementwise")


def _fwd_add(arrays, attrs):
    return arrays[0] + arrays[1], {}


def _bwd_add(g, arrays, out, cache, attrs, needs):
    a, b = arrays
    return [
        unbroadcast(g, a.shape) if needs[0] else None,
        unbroadcast(g, b.shape) if needs[1] else None,
    ]


def _fwd_multiply(arrays, attrs):
    return arrays[0] * arrays[1], {}


def _bwd_multiply(g, arrays, out, cache, attrs, needs):
    a, b = arrays
    return [
        unbroadcast(g * b, a.shape) if needs[0] else None,
        unbroadcast(g * a, b.shape) if needs[1] else None,
    ]


# -- unary ----------------------------------------------------------------

def _check_scale(arrays, attrs):
    _arity(1)(arrays, attrs)
    if "factor" not in attrs or not np.isfinite(attrs["factor"]):
        raise ContractViolation("scale: a finite 'factor' attribute is required")


def _fwd_scale(arrays, attrs):
    return arrays[0] * attrs["factor"], {}


def _bwd_scale(g, arrays, out, cache, attrs, needs):
    return [g * attrs["factor"]]


def _fwd_negate(arrays, attrs):
    return -arrays[0], {}


def _bwd_negate(g, arrays, out, cache, attrs, needs):
    return [-g]


def _fwd_exp(arrays, attrs):
    return np.exp(arrays[0]), {}


def _bwd_exp(g, arrays, out, cache, attrs, needs):
    return [g * out]


def _check_log(arrays, attrs):
    _arity(1)(arrays, attrs)
    if attrs.get("floor", LOG_FLOOR) <= 0:
        raise ContractViolation("log: floor must be positive")


def _fwd_log(arrays, attrs):
    x = arrays[0]
    floor = attrs.get("floor", LOG_FLOOR)
    clamped = x <= floor
    return np.log(np.where(clamped, floor, x)), {"clamped": clamped}


def _bwd_log(g, arrays, out, cache, attrs, needs):
    x = arrays[0]
    safe = np.where(cache["clamped"], 1.0, x)
    return [np.where(cache["clamped"], 0.0, g / safe)]


def _fwd_relu(arrays, attrs):
    return np.maximum(arrays[0], 0.0), {}


def _bwd_relu(g, arrays, out, cache, attrs, needs):
    return [g * (arrays[0] > 0)]


def _fwd_gelu(arrays, attrs):
    x = arrays[0]
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    return x * cdf, {"cdf": cdf}


def _bwd_gelu(g, arrays, out, cache, attrs, needs):
    x = arrays[0]
    pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
    return [g * (cache["cdf"] + x * pdf)]


def _check_nonempty_cols(arrays, attrs):
    _arity(1)(arrays, attrs)
    if arrays[0].shape[1] == 0:
        raise ContractViolation("row reduction over zero columns")


def _fwd_row_mean(arrays, attrs):
    return arrays[0].mean(axis=1, keepdims=True), {}


def _bwd_row_mean(g, arrays, out, cache, attrs, needs):
    x = arrays[0]
    return [np.broadcast_to(g / x.shape[1], x.shape).copy()]


def _fwd_row_variance(arrays, attrs):
    x = arrays[0]
    centered = x - x.mean(axis=1, keepdims=True)
    return (centered ** 2).mean(axis=1, keepdims=True), {"centered": centered}


def _bwd_row_variance(g, arrays, out, cache, attrs, needs):
    x = arrays[0]
    return [g * 2.0 * cache["centered"] / x.shape[1]]


def _fwd_row_logsumexp(arrays, attrs):
    return logsumexp(arrays[0], axis=1, keepdims=True), {}


def _bwd_row_logsumexp(g, arrays, out, cache, attrs, needs):
    return [g * np.exp(arrays[0] - out)]


def _fwd_sum(arrays, attrs):
    return np.array([[arrays[0].sum()]]), {}


def _bwd_sum(g, arrays, out, cache, attrs, needs):
    return [np.full(arrays[0].shape, g[0, 0])]


def _check_mean(arrays, attrs):
    _arity(1)(arrays, attrs)
    if arrays[0].size == 0:
        raise ContractViolation("mean of an empty tensor")


def _fwd_mean(arrays, attrs):
    return np.array([[arrays[0].mean()]]), {}


def _bwd_mean(g, arrays, out, cache, attrs, needs):
    x = arrays[0]
    return [np.full(x.shape, g[0, 0] / x.size)]


def _fwd_transpose(arrays, attrs):
    return arrays[0].T.copy(), {}


def _bwd_transpose(g, arrays, out, cache, attrs, needs):
    return [g.T.copy()]


def _check_row_mask(arrays, attrs):
    _arity(1)(arrays, attrs)
    keep = np.asarray(attrs.get("keep"))
    if keep.dtype != bool or keep.shape != (arrays[0].shape[0],):
        raise ContractViolation(
            f"row_mask_select: 'keep' must be a boolean vector of length {arrays[0].shape[0]}"
        )


def _fwd_row_mask(arrays, attrs):
    keep = np.asarray(attrs["keep"])
    return arrays[0][keep], {}


def _bwd_row_mask(g, arrays, out, cache, attrs, needs):
    grad = np.zeros_like(arrays[0])
    grad[np.asarray(attrs["keep"])] = g
    return [grad]


def _check_concat(arrays, attrs):
    if not arrays:
        raise ContractViolation("concat_rows needs at least one input")
    cols = {a.shape[1] for a in arrays}
    if len(cols) != 1:
        raise ContractViolation(f"concat_rows: column counts differ {sorted(cols)}")


def _fwd_concat(arrays, attrs):
    return np.concatenate(arrays, axis=0), {}


def _bwd_concat(g, arrays, out, cache, attrs, needs):
    grads, start = [], 0
    for a, need in zip(arrays, needs):
        stop = start + a.shape[0]
        grads.append(g[start:stop].copy() if need else None)
        start = stop
    return grads


# -- convolution over time ---------------------------------------------------

def conv_output_length(t_in: int, kernel_width: int, stride: int, padding: int) -> int:
    """Frames produced by a 1-D convolution: floor((T + 2p - k) / s) + 1, floored at 0."""
    span = t_in + 2 * padding - kernel_width
    return 0 if span < 0 else span // stride + 1


def _check_conv(arrays, attrs):
    _arity(2)(arrays, attrs)
    x, w = arrays
    k = attrs.get("kernel_width", 0)
    stride = attrs.get("stride", 1)
    padding = attrs.get("padding", 0)
    if k < 1 or stride < 1 or padding < 0:
        raise ContractViolation(f"conv1d: invalid kernel_width={k} stride={stride} padding={padding}")
    if w.shape[0] != k * x.shape[1]:
        raise ContractViolation(
            f"conv1d: weight has {w.shape[0]} rows, expected kernel_width*D_in={k * x.shape[1]}"
        )


def _fwd_conv(arrays, attrs):
    x, w = arrays
    k, stride, padding = attrs["kernel_width"], attrs.get("stride", 1), attrs.get("padding", 0)
    length = conv_output_length(x.shape[0], k, stride, padding)
    d_in = x.shape[1]
    if length == 0:
        cols = np.zeros((0, k * d_in))
    else:
        padded = np.pad(x, ((padding, padding), (0, 0)))
        windows = np.lib.stride_tricks.sliding_window_view(padded, k, axis=0)[::stride][:length]
        # windows: (L, D_in, k) -> rows laid out frame-major: [x[t], x[t+1], ...]
        cols = windows.transpose(0, 2, 1).reshape(length, k * d_in)
    return cols @ w, {"cols": cols, "length": length}


def _bwd_conv(g, arrays, out, cache, attrs, needs):
    x, w = arrays
    k, stride, padding = attrs["kernel_width"], attrs.get("stride", 1), attrs.get("padding", 0)
    length, cols = cache["length"], cache["cols"]
    grad_x = grad_w = None
    if needs[1]:
        grad_w = cols.T @ g
    if needs[0]:
        d_in = x.shape[1]
        padded = np.zeros((x.shape[0] + 2 * padding, d_in))
        if length:
            dcols = (g @ w.T).reshape(length, k, d_in)
            last = stride * (length - 1) + 1
            for j in range(k):
                padded[j:j + last:stride] += dcols[:, j, :]
        grad_x = padded[padding:padding + x.shape[0]]
    return [grad_x, grad_w]


# -- layer normalization ----------------------------------------------------

def _check_layer_norm(arrays, attrs):
    _arity(3)(arrays, attrs)
    x, gamma, beta = arrays
    d = x.shape[1]
    if d < 1:
        raise ContractViolation("layer_norm: D must be at least 1")
    if gamma.shape != (1, d) or beta.shape != (1, d):
        raise ContractViolation(
            f"layer_norm: gamma/beta must be (1, {d}), got {gamma.shape} and {beta.shape}"
        )
    if not attrs.get("eps", 0) > 0:
        raise ContractViolation("layer_norm: eps must be positive")


def _fwd_layer_norm(arrays, attrs):
    x, gamma, beta = arrays
    mu = x.mean(axis=1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=1, keepdims=True)
    std = np.sqrt(var + attrs["eps"])
    x_hat = (x - mu) / std
    return x_hat * gamma + beta, {"x_hat": x_hat, "std": std}


def _bwd_layer_norm(g, arrays, out, cache, attrs, needs):
    x, gamma, beta = arrays
    x_hat, std = cache["x_hat"], cache["std"]
    grad_x = None
    if needs[0]:
        gg = g * gamma
        grad_x = (
            gg
            - gg.mean(axis=1, keepdims=True)
            - x_hat * (gg * x_hat).mean(axis=1, keepdims=True)
        ) / std
    grad_gamma = (g * x_hat).sum(axis=0, keepdims=True) if needs[1] else None
    grad_beta = g.sum(axis=0, keepdims=True) if needs[2] else None
    return [grad_x, grad_gamma, grad_beta]


# -- CTC negative log-likelihood ---------------------------------------------

def extend_target(target: Sequence[int], blank: int) -> np.ndarray:
    """Blank-augmented label sequence: blank, y1, blank, y2, ..., blank."""
    extended = np.full(2 * len(target) + 1, blank, dtype=np.int64)
    extended[1::2] = np.asarray(target, dtype=np.int64)
    return extended


def min_ctc_frames(target: Sequence[int]) -> int:
    """Fewest frames that can emit `target`: one per label plus one per adjacent repeat."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def _skip_allowed(extended: np.ndarray, blank: int) -> np.ndarray:
    allowed = np.zeros(len(extended), dtype=bool)
    allowed[2:] = (extended[2:] != blank) & (extended[2:] != extended[:-2])
    return allowed


def ctc_forward_backward(log_probs: np.ndarray, target: Sequence[int], blank: int):
    """
    Log-space alpha and beta recursions over the blank-augmented target.

    Both alpha and beta include the emission of their own frame.

    Returns:
        (log_alpha L×S, log_beta L×S, log_likelihood, extended labels)
    """
    n_frames = log_probs.shape[0]
    extended = extend_target(target, blank)
    n_states = len(extended)
    skip = _skip_allowed(extended, blank)
    emit = log_probs[:, extended]

    log_alpha = np.full((n_frames, n_states), -np.inf)
    log_alpha[0, 0] = emit[0, 0]
    if n_states > 1:
        log_alpha[0, 1] = emit[0, 1]
    for t in range(1, n_frames):
        prev = log_alpha[t - 1]
        acc = prev.copy()
        acc[1:] = np.logaddexp(acc[1:], prev[:-1])
        acc[2:] = np.where(skip[2:], np.logaddexp(acc[2:], prev[:-2]), acc[2:])
        log_alpha[t] = acc + emit[t]

    log_beta = np.full((n_frames, n_states), -np.inf)
    log_beta[-1, -1] = emit[-1, -1]
    if n_states > 1:
        log_beta[-1, -2] = emit[-1, -2]
    skip_from = np.zeros(n_states, dtype=bool)
    skip_from[:-2] = skip[2:]
    for t in range(n_frames - 2, -1, -1):
        nxt = log_beta[t + 1]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        acc[:-2] = np.where(skip_from[:-2], np.logaddexp(acc[:-2], nxt[2:]), acc[:-2])
        log_beta[t] = acc + emit[t]

    if n_states > 1:
        log_likelihood = np.logaddexp(log_alpha[-1, -1], log_alpha[-1, -2])
    else:
        log_likelihood = log_alpha[-1, -1]
    return log_alpha, log_beta, float(log_likelihood), extended


def _check_ctc(arrays, attrs):
    _arity(1)(arrays, attrs)
    log_probs = arrays[0]
    target = list(attrs.get("target", ()))
    blank = attrs.get("blank", 0)
    n_classes = log_probs.shape[1]
    if not 0 <= blank < n_classes:
        raise ContractViolation(f"ctc: blank index {blank} outside 0..{n_classes - 1}")
    if any(not 0 <= c < n_classes or c == blank for c in target):
        raise DataError(f"ctc: target labels must be non-blank classes in 0..{n_classes - 1}")
    if log_probs.shape[0] < max(1, min_ctc_frames(target)):
        raise DataError(
            f"ctc: {log_probs.shape[0]} frames cannot emit a target of length {len(target)} "
            f"(needs {min_ctc_frames(target)})"
        )


def _fwd_ctc(arrays, attrs):
    log_probs = arrays[0]
    log_alpha, log_beta, log_likelihood, extended = ctc_forward_backward(
        log_probs, list(attrs["target"]), attrs.get("blank", 0)
    )
    cache = {"log_alpha": log_alpha, "log_beta": log_beta, "ll": log_likelihood, "ext": extended}
    return np.array([[-log_likelihood]]), cache


def _bwd_ctc(g, arrays, out, cache, attrs, needs):
    log_probs = arrays[0]
    ext = cache["ext"]
    log_gamma = cache["log_alpha"] + cache["log_beta"] - log_probs[:, ext]
    state_post = np.exp(log_gamma - cache["ll"])
    occupancy = np.zeros_like(log_probs)
    for s, label in enumerate(ext):
        occupancy[:, label] += state_post[:, s]
    return [-g[0, 0] * occupancy]


register(OpKind.MATMUL, _check_matmul, _fwd_matmul, _bwd_matmul)
register(OpKind.ADD, _check_elementwise, _fwd_add, _bwd_add)
register(OpKind.MULTIPLY, _check_elementwise, _fwd_multiply, _bwd_multiply)
register(OpKind.SCALE, _check_scale, _fwd_scale, _bwd_scale)
register(OpKind.NEGATE, _arity(1), _fwd_negate, _bwd_negate)
register(OpKind.EXP, _arity(1), _fwd_exp, _bwd_exp)
register(OpKind.LOG, _check_log, _fwd_log, _bwd_log)
register(OpKind.RELU, _arity(1), _fwd_relu, _bwd_relu)
register(OpKind.GELU, _arity(1), _fwd_gelu, _bwd_gelu)
register(OpKind.ROW_MEAN, _check_nonempty_cols, _fwd_row_mean, _bwd_row_mean)
register(OpKind.ROW_VARIANCE, _check_nonempty_cols, _fwd_row_variance, _bwd_row_variance)
register(OpKind.ROW_LOGSUMEXP, _check_nonempty_cols, _fwd_row_logsumexp, _bwd_row_logsumexp)
register(OpKind.SUM, _arity(1), _fwd_sum, _bwd_sum)
register(OpKind.MEAN, _check_mean, _fwd_mean, _bwd_mean)
register(OpKind.TRANSPOSE, _arity(1), _fwd_transpose, _bwd_transpose)
register(OpKind.ROW_MASK_SELECT, _check_row_mask, _fwd_row_mask, _bwd_row_mask)
register(OpKind.CONCAT_ROWS, _check_concat, _fwd_concat, _bwd_concat)
register(OpKind.CONV1D, _check_conv, _fwd_conv, _bwd_conv)
register(OpKind.LAYER_NORM, _check_layer_norm, _fwd_layer_norm, _bwd_layer_norm)
register(OpKind.CTC_NLL, _check_ctc, _fwd_ctc, _bwd_ctc)
