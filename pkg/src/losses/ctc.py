"""CTC loss and alignment helpers."""

import itertools
from typing import Iterator, List, Sequence, Tuple

from ..eval.decoding import collapse_path
from ..gradcore import Tensor, min_ctc_frames
from ..gradcore import functional as F
from ..utils.errors import DataError


def ctc_feasible(n_frames: int, target: Sequence[int]) -> bool:
    """Whether n_frames can emit target: L ≥ ℓ + number of adjacent repeats."""
    return n_frames >= max(1, min_ctc_frames(list(target)))


def ctc_loss(log_probs: Tensor, target: Sequence[int], blank_index: int = 0) -> Tensor:
    """
    Negative log of the total probability of all blank-augmented alignments.

    Args:
        log_probs: L×C log-probabilities (usually a row log-softmax)
        target: Label ids, no blanks
        blank_index: CTC blank class

    Returns:
        1×1 loss tensor, differentiable w.r.t. log_probs

    Raises:
        DataError: If the target cannot be emitted in L frames
    """
    target = [int(t) for t in target]
    if not ctc_feasible(log_probs.shape[0], target):
        raise DataError(
            f"CTC target of length {len(target)} needs {min_ctc_frames(target)} frames, "
            f"got {log_probs.shape[0]}"
        )
    return F.ctc_nll(log_probs, target, blank_index)


def ctc_alignments(
    n_frames: int,
    target: Sequence[int],
    n_classes: int,
    blank_index: int = 0
) -> Iterator[Tuple[int, ...]]:
    """Brute-force every frame-level path of length n_frames that collapses to target."""
    wanted: List[int] = list(target)
    for path in itertools.product(range(n_classes), repeat=n_frames):
        if collapse_path(path, blank_index) == wanted:
            yield path
