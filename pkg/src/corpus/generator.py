"""Synthetic utterances with controllable covariate shift.

Every character owns a fixed random prototype vector (the "pronunciation"),
drawn from `prototype_seed` so that train and test corpora share them. An
utterance is silence, then each character's prototype repeated for a few
frames, then silence, plus Gaussian template jitter.
"""

import zlib
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..eval.transcript import CHARSET, LETTERS, Transcript
from ..utils.errors import ContractViolation
from ..utils.logger import get_logger

logger = get_logger(__name__)

IntRange = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class Utterance:
    """Feature matrix (T_in×D_in) plus reference transcript."""

    id: str
    features: np.ndarray
    transcript: Transcript
    domain_tag: str = "clean"

    @property
    def duration_frames(self) -> int:
        return int(self.features.shape[0])

    def with_features(self, features: np.ndarray, domain_tag: str) -> "Utterance":
        return Utterance(self.id, features, self.transcript, domain_tag)

    def equals(self, other: "Utterance") -> bool:
        """Field-for-field equality, features compared bit for bit."""
        return (
            self.id == other.id
            and self.transcript == other.transcript
            and self.domain_tag == other.domain_tag
            and self.features.shape == other.features.shape
            and self.features.astype("<f8").tobytes() == other.features.astype("<f8").tobytes()
        )


Corpus = List[Utterance]


class CorpusSpec(BaseModel):
    """Everything needed to regenerate a corpus bit for bit."""

    model_config = ConfigDict(frozen=True)

    count: int = Field(50, ge=1)
    words_per_utterance: IntRange = (1, 6)
    letters_per_word: IntRange = (2, 5)
    frames_per_char: IntRange = (2, 4)
    silence_frames: IntRange = (2, 5)
    template_jitter: float = Field(0.3, ge=0)
    noise_delta: float = Field(0.0, ge=0)
    feature_dim: int = Field(16, ge=1)
    frames_per_second: float = Field(20.0, gt=0)
    alphabet: str = LETTERS
    prototype_seed: int = 1234
    seed: int = 0
    id_prefix: str = "utt"
    domain_tag: str = "clean"

    @model_validator(mode="after")
    def _check_ranges(self) -> "CorpusSpec":
        for name in ("words_per_utterance", "letters_per_word", "frames_per_char"):
            low, high = getattr(self, name)
            if low < 1 or high < low:
                raise ValueError(f"{name} must satisfy 1 <= low <= high, got {(low, high)}")
        low, high = self.silence_frames
        if low < 0 or high < low:
            raise ValueError(f"silence_frames must satisfy 0 <= low <= high, got {(low, high)}")
        if not self.alphabet:
            raise ValueError("alphabet is empty")
        unknown = set(self.alphabet) - set(LETTERS)
        if unknown:
            raise ValueError(f"alphabet has symbols outside the model vocabulary: {sorted(unknown)}")
        if len(set(self.alphabet)) < 2 and self.letters_per_word[1] > 1:
            raise ValueError("need at least two distinct letters to avoid repeated characters")
        return self

    @classmethod
    def build(cls, **fields) -> "CorpusSpec":
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ContractViolation(f"Invalid corpus spec: {e}") from e

    @property
    def short_threshold_frames(self) -> int:
        """Frames equivalent to two seconds."""
        return int(round(2.0 * self.frames_per_second))


def character_prototypes(feature_dim: int, prototype_seed: int) -> Tuple[dict, np.ndarray]:
    """
    Fixed template per character plus a silence template.

    Returns:
        (char -> D vector, silence D vector)
    """
    rng = np.random.default_rng(prototype_seed)
    table = rng.standard_normal((len(CHARSET), feature_dim))
    prototypes = {ch: table[i] for i, ch in enumerate(CHARSET)}
    silence = np.zeros(feature_dim)
    return prototypes, silence


def _sample_word(rng: np.random.Generator, alphabet: str, length: int) -> str:
    letters: List[str] = []
    for _ in range(length):
        choices = [ch for ch in alphabet if not letters or ch != letters[-1]]
        letters.append(choices[rng.integers(len(choices))])
    return "".join(letters)


def _draw(rng: np.random.Generator, bounds: IntRange) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def generate_corpus(spec: CorpusSpec) -> Corpus:
    """
    Generate `spec.count` utterances deterministically from `spec.seed`.

    Consecutive identical letters are never sampled inside a word, so every
    transcript can be read back from its frames. A positive `noise_delta`
    adds Gaussian noise on top (same as `add_gaussian_noise`).
    """
    prototypes, silence = character_prototypes(spec.feature_dim, spec.prototype_seed)
    rng = np.random.default_rng(spec.seed)
    width = len(str(spec.count - 1))
    corpus: Corpus = []

    for index in range(spec.count):
        n_words = _draw(rng, spec.words_per_utterance)
        words = [_sample_word(rng, spec.alphabet, _draw(rng, spec.letters_per_word)) for _ in range(n_words)]
        transcript = Transcript.from_text(" ".join(words))

        frames = [np.tile(silence, (_draw(rng, spec.silence_frames), 1))]
        for ch in transcript.text:
            frames.append(np.tile(prototypes[ch], (_draw(rng, spec.frames_per_char), 1)))
        frames.append(np.tile(silence, (_draw(rng, spec.silence_frames), 1)))
        features = np.concatenate(frames, axis=0)
        features = features + spec.template_jitter * rng.standard_normal(features.shape)

        utterance = Utterance(
            id=f"{spec.id_prefix}-{index:0{width}d}",
            features=features,
            transcript=transcript,
            domain_tag=spec.domain_tag,
        )
        if spec.noise_delta > 0:
            utterance = add_gaussian_noise(utterance, spec.noise_delta, spec.seed)
        corpus.append(utterance)

    logger.info(
        f"Generated {len(corpus)} utterances ({spec.domain_tag}, seed {spec.seed}, "
        f"{sum(u.duration_frames for u in corpus)} frames)"
    )
    return corpus


def _utterance_rng(utterance_id: str, seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt, zlib.crc32(utterance_id.encode("utf-8"))])


def add_gaussian_noise(utterance: Utterance, delta: float, seed: int) -> Utterance:
    """
    features + delta·ε with ε ~ N(0, 1) per entry.

    The noise stream depends on (seed, utterance id) only, so a corpus gets
    the same noise regardless of utterance order.

    Raises:
        ContractViolation: If delta is negative
    """
    if delta < 0:
        raise ContractViolation(f"noise delta must be >= 0, got {delta}")
    tag = f"{utterance.domain_tag}+noise{delta:g}"
    if delta == 0:
        return utterance.with_features(utterance.features.copy(), tag)
    rng = _utterance_rng(utterance.id, seed, salt=1)
    noisy = utterance.features + delta * rng.standard_normal(utterance.features.shape)
    return utterance.with_features(noisy, tag)


def apply_channel_shift(
    utterance: Utterance,
    gain_sigma: float,
    offset_sigma: float,
    seed: int
) -> Utterance:
    """
    Per-dimension affine distortion x·g + b, fixed for a given seed.

    g = exp(gain_sigma·N(0,1)), b = offset_sigma·N(0,1), one draw per feature
    dimension shared by every utterance: a recording-channel mismatch.
    """
    if gain_sigma < 0 or offset_sigma < 0:
        raise ContractViolation("channel shift sigmas must be >= 0")
    rng = np.random.default_rng([seed, 2])
    dim = utterance.features.shape[1]
    gains = np.exp(gain_sigma * rng.standard_normal(dim))
    offsets = offset_sigma * rng.standard_normal(dim)
    tag = f"{utterance.domain_tag}+chan{gain_sigma:g}/{offset_sigma:g}"
    return utterance.with_features(utterance.features * gains + offsets, tag)


def shift_corpus(
    corpus: Corpus,
    noise_delta: float = 0.0,
    gain_sigma: float = 0.0,
    offset_sigma: float = 0.0,
    seed: int = 0,
    domain_tag: Optional[str] = None
) -> Corpus:
    """Channel shift (when any sigma is positive) followed by Gaussian noise, utterance by utterance."""
    shifted: Corpus = []
    for utterance in corpus:
        if gain_sigma > 0 or offset_sigma > 0:
            utterance = apply_channel_shift(utterance, gain_sigma, offset_sigma, seed)
        if noise_delta > 0:
            utterance = add_gaussian_noise(utterance, noise_delta, seed)
        if domain_tag is not None:
            utterance = utterance.with_features(utterance.features, domain_tag)
        shifted.append(utterance)
    return shifted
