"""Greedy CTC decoding."""

from typing import List, Union

import numpy as np

from ..gradcore import Tensor
from .transcript import BLANK_INDEX, Transcript, decode_tokens


def best_path(logits: Union[np.ndarray, Tensor]) -> np.ndarray:
    """Per-frame argmax; np.argmax already breaks ties toward the lowest class id."""
    values = logits.values if isinstance(logits, Tensor) else np.asarray(logits)
    return np.argmax(values, axis=1)


def collapse_path(path, blank_index: int = BLANK_INDEX) -> List[int]:
    """CTC collapse: merge consecutive repeats, then delete blanks."""
    tokens, previous = [], None
    for label in path:
        label = int(label)
        if label != previous and label != blank_index:
            tokens.append(label)
        previous = label
    return tokens


def greedy_ctc_decode(logits: Union[np.ndarray, Tensor], blank_index: int = BLANK_INDEX) -> Transcript:
    """
    Decode an L×C logit (or probability) matrix into a transcript.

    Args:
        logits: Model outputs, one row per frame
        blank_index: Class id of the CTC blank

    Returns:
        Canonical transcript (empty when every frame is blank)
    """
    tokens = collapse_path(best_path(logits), blank_index)
    return Transcript.from_text(decode_tokens(tokens))
