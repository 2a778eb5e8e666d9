"""Unsupervised test-time objectives over CTC frame posteriors.

All losses take and return gradcore tensors so they backpropagate into
whichever model parameters require gradients.
"""

from enum import Enum
from typing import NamedTuple

import numpy as np

from ..gradcore import Tensor
from ..gradcore import functional as F
from ..utils.errors import ContractViolation
from ..utils.logger import get_logger

logger = get_logger(__name__)


class EntropyNorm(str, Enum):
    """Normalizer of the entropy term."""

    RETAINED = "retained"   # mean over frames kept by the blank mask
    FULL = "full"           # divide by all L frames


class ProbMatrix(NamedTuple):
    """Temperature-smoothed frame posteriors, L×C."""

    values: Tensor
    temperature_used: float


class FrameMask(NamedTuple):
    """Per-frame keep flags; false where the blank is the argmax."""

    keep: np.ndarray

    @property
    def retained(self) -> int:
        return int(self.keep.sum())


class LossBreakdown(NamedTuple):
    """Combined objective plus its parts."""

    loss: Tensor
    entropy: float
    mcc: float
    retained_frames: int
    total_frames: int


def softmax_temperature(logits: Tensor, temperature: float) -> ProbMatrix:
    """
    Row-wise softmax of logits / T.

    Args:
        logits: L×C logit matrix
        temperature: T > 0; T > 1 flattens the distribution, T = 1 is the
            plain softmax (adaptation settings require T ≥ 1)

    Returns:
        ProbMatrix whose rows sum to one

    Raises:
        ContractViolation: If T ≤ 0
    """
    if not temperature > 0.0:
        raise ContractViolation(f"temperature must be > 0, got {temperature}")
    scaled = logits if temperature == 1.0 else F.scale(logits, 1.0 / temperature)
    return ProbMatrix(F.softmax_rows(scaled), float(temperature))


def blank_mask(probs: ProbMatrix, blank_index: int = 0) -> FrameMask:
    """
    Frames to keep for the entropy term.

    A frame is dropped when the blank is its argmax; ties go to the lowest
    class id, so a uniform row with blank 0 is dropped. The mask is a constant
    for differentiation.
    """
    values = probs.values.values
    if not 0 <= blank_index < values.shape[1]:
        raise ContractViolation(f"blank index {blank_index} outside 0..{values.shape[1] - 1}")
    return FrameMask(np.argmax(values, axis=1) != blank_index)


def _graph_zero(like: Tensor) -> Tensor:
    return like.graph.leaf(np.zeros((1, 1)))


def entropy_loss(
    probs: ProbMatrix,
    mask: FrameMask,
    norm: EntropyNorm = EntropyNorm.RETAINED
) -> Tensor:
    """
    Mean Shannon entropy (natural log) of the retained frames.

    Returns a constant 0 when no frame is retained. With `EntropyNorm.FULL`
    the retained entropies are divided by L instead of the retained count.
    """
    p = probs.values
    total = p.shape[0]
    if mask.keep.shape != (total,):
        raise ContractViolation(f"mask length {mask.keep.shape} does not match {total} frames")
    retained = mask.retained
    if retained == 0:
        return _graph_zero(p)
    kept = F.row_mask_select(p, mask.keep)
    neg_entropy = F.sum(F.multiply(kept, F.log(kept)))
    denominator = retained if EntropyNorm(norm) is EntropyNorm.RETAINED else total
    return F.scale(neg_entropy, -1.0 / denominator)


def mcc_loss(probs: ProbMatrix) -> Tensor:
    """
    Sum of the off-diagonal entries of the class Gram matrix PᵀP.

    Computed as sum(PᵀP) − Σ_j ‖P_·j‖², over all frames, unnormalized.
    """
    p = probs.values
    gram = F.matmul(F.transpose(p), p)
    diagonal = F.sum(F.multiply(p, p))
    return F.subtract(F.sum(gram), diagonal)


def combined_loss(
    logits: Tensor,
    alpha: float,
    temperature: float,
    blank_index: int = 0,
    norm: EntropyNorm = EntropyNorm.RETAINED
) -> LossBreakdown:
    """
    α·L_em + (1 − α)·L_mcc on one temperature-smoothed posterior matrix.

    Args:
        logits: L×C model output
        alpha: Weight of the entropy term, in [0, 1]
        temperature: Smoothing temperature T > 0 (AdaptConfig requires T ≥ 1)
        blank_index: CTC blank class
        norm: Entropy normalizer

    Returns:
        LossBreakdown with the differentiable loss and float diagnostics

    Raises:
        ContractViolation: If alpha is outside [0, 1]
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha must be in [0, 1], got {alpha}")

    probs = softmax_temperature(logits, temperature)
    mask = blank_mask(probs, blank_index)
    l_em = entropy_loss(probs, mask, norm)
    l_mcc = mcc_loss(probs)
    loss = F.add(F.scale(l_em, alpha), F.scale(l_mcc, 1.0 - alpha))

    logger.debug(
        f"L_em={l_em.item():.6f} L_mcc={l_mcc.item():.6f} retained={mask.retained}/{len(mask.keep)}"
    )
    return LossBreakdown(
        loss=loss,
        entropy=l_em.item(),
        mcc=l_mcc.item(),
        retained_frames=mask.retained,
        total_frames=len(mask.keep),
    )
