"""Synthetic corpora and corpus files."""

from .generator import (
    Corpus,
    CorpusSpec,
    Utterance,
    add_gaussian_noise,
    apply_channel_shift,
    character_prototypes,
    generate_corpus,
    shift_corpus,
)
from .storage import load_corpus, save_corpus, sidecar_path

__all__ = [
    "Corpus",
    "CorpusSpec",
    "Utterance",
    "add_gaussian_noise",
    "apply_channel_shift",
    "character_prototypes",
    "generate_corpus",
    "shift_corpus",
    "load_corpus",
    "save_corpus",
    "sidecar_path",
]
