"""Greedy CTC decoding and error-rate metrics."""

from .transcript import (
    BLANK_INDEX,
    CHARSET,
    LETTERS,
    VOCAB,
    VOCAB_SIZE,
    Transcript,
    canonicalize,
    check_vocabulary,
    decode_tokens,
    encode_transcript,
)
from .decoding import best_path, collapse_path, greedy_ctc_decode
from .metrics import WerReport, align, cer, corpus_wer, wer, werr

__all__ = [
    "BLANK_INDEX",
    "CHARSET",
    "LETTERS",
    "VOCAB",
    "VOCAB_SIZE",
    "Transcript",
    "canonicalize",
    "check_vocabulary",
    "decode_tokens",
    "encode_transcript",
    "best_path",
    "collapse_path",
    "greedy_ctc_decode",
    "WerReport",
    "align",
    "cer",
    "corpus_wer",
    "wer",
    "werr",
]
