"""Character vocabulary and canonical transcripts."""

import re
from typing import Iterable, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from ..utils.errors import DataError

BLANK_INDEX = 0
BLANK_SYMBOL = "<b>"
# Class 0 is the CTC blank; the rest are space, A-Z and apostrophe
CHARSET = " ABCDEFGHIJKLMNOPQRSTUVWXYZ'"
VOCAB: Tuple[str, ...] = (BLANK_SYMBOL,) + tuple(CHARSET)
VOCAB_SIZE = len(VOCAB)
LETTERS = CHARSET[1:]

_CHAR_TO_ID = {ch: i for i, ch in enumerate(VOCAB) if i != BLANK_INDEX}
# Punctuation is anything but word characters, apostrophes and whitespace
_PUNCTUATION = re.compile(r"[^\w'\s]|_")
_WHITESPACE = re.compile(r"\s+")


def canonicalize(text: str) -> str:
    """
    Upper-case, drop punctuation except apostrophes, collapse whitespace.

    Digits and letters outside A-Z are kept, so `encode_transcript` can
    reject them.

    Args:
        text: Raw transcript text

    Returns:
        Canonical text: upper-case words separated by single spaces
    """
    return _WHITESPACE.sub(" ", _PUNCTUATION.sub("", text.upper())).strip()


class Transcript(BaseModel):
    """An ordered word list in canonical form."""

    model_config = ConfigDict(frozen=True)

    words: Tuple[str, ...] = ()

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        canonical = canonicalize(text)
        return cls(words=tuple(canonical.split(" ")) if canonical else ())

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def __str__(self) -> str:
        return self.text


def encode_transcript(transcript: Transcript, utterance_id: str = "") -> List[int]:
    """
    Map a transcript to class ids (spaces between words included).

    Raises:
        DataError: If a character is outside the model vocabulary
    """
    ids = []
    for ch in transcript.text:
        if ch not in _CHAR_TO_ID:
            raise DataError(f"Out-of-vocabulary symbol {ch!r} in transcript", record_id=utterance_id or None)
        ids.append(_CHAR_TO_ID[ch])
    return ids


def decode_tokens(tokens: Sequence[int]) -> str:
    """Map non-blank class ids back to characters."""
    return "".join(VOCAB[t] for t in tokens if t != BLANK_INDEX)


def check_vocabulary(texts: Iterable[Tuple[str, str]]) -> None:
    """Raise DataError naming the first (id, text) pair with an out-of-vocabulary symbol."""
    for utterance_id, text in texts:
        for ch in text:
            if ch not in _CHAR_TO_ID:
                raise DataError(f"Out-of-vocabulary symbol {ch!r} in transcript", record_id=utterance_id)
