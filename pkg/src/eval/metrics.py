"""Word error rate, relative WER reduction and character error rate."""

from typing import Iterable, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..utils.errors import DataError
from .transcript import Transcript


class WerReport(BaseModel):
    """Edit-distance decomposition of a hypothesis against a reference."""

    model_config = ConfigDict(frozen=True)

    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    ref_words: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_words if self.ref_words else 0.0

    def __add__(self, other: "WerReport") -> "WerReport":
        return WerReport(
            substitutions=self.substitutions + other.substitutions,
            deletions=self.deletions + other.deletions,
            insertions=self.insertions + other.insertions,
            ref_words=self.ref_words + other.ref_words,
        )


def edit_table(reference: Sequence[str], hypothesis: Sequence[str]) -> np.ndarray:
    """Levenshtein cost table; cell [i, j] aligns reference[:i] with hypothesis[:j]."""
    n, m = len(reference), len(hypothesis)
    costs = np.zeros((n + 1, m + 1), dtype=np.int64)
    costs[:, 0] = np.arange(n + 1)
    costs[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diagonal = costs[i - 1, j - 1] + (reference[i - 1] != hypothesis[j - 1])
            costs[i, j] = min(diagonal, costs[i - 1, j] + 1, costs[i, j - 1] + 1)
    return costs


def align(reference: Sequence[str], hypothesis: Sequence[str]) -> Tuple[int, int, int]:
    """
    Minimal edit script counts via backtrace.

    Ties are broken substitution (or match) first, then deletion, then insertion.

    Returns:
        (substitutions, deletions, insertions)
    """
    costs = edit_table(reference, hypothesis)
    i, j = len(reference), len(hypothesis)
    subs = dels = ins = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            mismatch = reference[i - 1] != hypothesis[j - 1]
            if costs[i, j] == costs[i - 1, j - 1] + mismatch:
                subs += int(mismatch)
                i, j = i - 1, j - 1
                continue
        if i > 0 and costs[i, j] == costs[i - 1, j] + 1:
            dels += 1
            i -= 1
            continue
        ins += 1
        j -= 1
    return subs, dels, ins


def wer(reference: Transcript, hypothesis: Transcript) -> WerReport:
    """
    Word-level edit distance report.

    Args:
        reference: Ground-truth transcript (must be non-empty)
        hypothesis: Decoded transcript

    Returns:
        WerReport with S/D/I counts

    Raises:
        DataError: If the reference has no words
    """
    if len(reference) == 0:
        raise DataError("WER is undefined for an empty reference")
    subs, dels, ins = align(reference.words, hypothesis.words)
    return WerReport(substitutions=subs, deletions=dels, insertions=ins, ref_words=len(reference))


def corpus_wer(reports: Iterable[WerReport]) -> WerReport:
    """Total errors over total reference words."""
    total = WerReport()
    for report in reports:
        total = total + report
    return total


def werr(baseline_wer: float, adapted_wer: float) -> float:
    """
    Relative WER reduction (baseline - adapted) / baseline, as a fraction.

    Raises:
        DataError: If the baseline WER is not positive
    """
    if baseline_wer <= 0:
        raise DataError(f"WERR is undefined for baseline WER {baseline_wer}")
    return (baseline_wer - adapted_wer) / baseline_wer


def cer(reference: Transcript, hypothesis: Transcript) -> float:
    """Character error rate over the canonical texts (spaces count as characters)."""
    ref_chars = list(reference.text)
    if not ref_chars:
        raise DataError("CER is undefined for an empty reference")
    return float(edit_table(ref_chars, list(hypothesis.text))[-1, -1]) / len(ref_chars)
