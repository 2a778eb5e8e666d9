"""Tests for synthetic corpus generation, covariate shifts and corpus files."""

import numpy as np
import pytest

from src.corpus import (
    CorpusSpec,
    Utterance,
    add_gaussian_noise,
    apply_channel_shift,
    generate_corpus,
    load_corpus,
    save_corpus,
    shift_corpus,
    sidecar_path,
)
from src.eval import Transcript
from src.model import evaluate_wer
from src.utils.errors import ContractViolation, DataError, FormatError


def corpora_equal(a, b) -> bool:
    return len(a) == len(b) and all(x.equals(y) for x, y in zip(a, b))


def test_generation_is_deterministic(tiny_spec):
    """Same spec, bit-identical corpus."""
    assert corpora_equal(generate_corpus(tiny_spec), generate_corpus(tiny_spec))


def test_different_seeds_differ(tiny_spec):
    other = generate_corpus(tiny_spec.model_copy(update={"seed": 4}))
    assert not corpora_equal(generate_corpus(tiny_spec), other)


def test_generated_utterances_follow_spec(tiny_spec):
    corpus = generate_corpus(tiny_spec)
    assert len(corpus) == tiny_spec.count
    assert len({u.id for u in corpus}) == tiny_spec.count
    for utterance in corpus:
        assert 1 <= len(utterance.transcript) <= 2
        assert utterance.features.shape[1] == tiny_spec.feature_dim
        assert set(utterance.transcript.text) <= set("ABCD ")
        for word in utterance.transcript.words:
            assert 2 <= len(word) <= 3
            assert all(a != b for a, b in zip(word, word[1:]))
        # enough frames for every character plus the surrounding silence
        assert utterance.duration_frames >= 2 * len(utterance.transcript.text) + 2


def test_single_word_range():
    corpus = generate_corpus(CorpusSpec(count=10, words_per_utterance=(1, 1), feature_dim=4))
    assert all(len(u.transcript) == 1 for u in corpus)


def test_spec_rejects_bad_ranges():
    with pytest.raises(ContractViolation):
        CorpusSpec.build(words_per_utterance=(3, 1))
    with pytest.raises(ContractViolation):
        CorpusSpec.build(alphabet="A1")
    with pytest.raises(ContractViolation):
        CorpusSpec.build(count=0)


def test_noise_delta_zero_is_identity(tiny_corpus):
    """δ = 0 leaves features bit-identical."""
    for utterance in tiny_corpus:
        noisy = add_gaussian_noise(utterance, 0.0, seed=1)
        assert noisy.features.tobytes() == utterance.features.tobytes()
        assert noisy.transcript == utterance.transcript


def test_noise_standard_deviation(tiny_spec):
    """Added noise has std ≈ δ (within 5%) over at least 1000 entries."""
    corpus = generate_corpus(tiny_spec.model_copy(update={"count": 40}))
    delta = 0.7
    noisy = shift_corpus(corpus, noise_delta=delta, seed=9)
    residual = np.concatenate([(n.features - c.features).ravel() for n, c in zip(noisy, corpus)])
    assert residual.size >= 1000
    assert abs(residual.std() - delta) / delta < 0.05


def test_noise_depends_on_seed_and_id_only(tiny_corpus):
    """Reordering a corpus does not change any utterance's noise."""
    forward = shift_corpus(tiny_corpus, noise_delta=0.5, seed=2)
    backward = shift_corpus(list(reversed(tiny_corpus)), noise_delta=0.5, seed=2)
    assert corpora_equal(forward, list(reversed(backward)))
    other = shift_corpus(tiny_corpus, noise_delta=0.5, seed=3)
    assert not corpora_equal(forward, other)


def test_negative_noise_rejected(tiny_corpus):
    with pytest.raises(ContractViolation):
        add_gaussian_noise(tiny_corpus[0], -0.1, seed=0)


def test_channel_shift_is_shared_affine(tiny_corpus):
    """One gain and offset per feature dimension, the same for every utterance."""
    unit = Utterance("unit", np.array([[0.0] * 4, [1.0] * 4]), Transcript())
    shifted_unit = apply_channel_shift(unit, 0.3, 0.5, seed=4).features
    offsets, gains = shifted_unit[0], shifted_unit[1] - shifted_unit[0]
    assert np.all(gains > 0)
    for utterance in tiny_corpus:
        shifted = apply_channel_shift(utterance, 0.3, 0.5, seed=4)
        np.testing.assert_allclose(shifted.features, utterance.features * gains + offsets, atol=1e-12)


def test_shift_corpus_sets_domain_tag(tiny_corpus):
    shifted = shift_corpus(tiny_corpus, noise_delta=0.2, gain_sigma=0.1, seed=1, domain_tag="channel")
    assert {u.domain_tag for u in shifted} == {"channel"}
    assert [u.id for u in shifted] == [u.id for u in tiny_corpus]


def test_save_load_round_trip(tiny_corpus, tmp_path):
    """Saved corpora load back bit for bit, with a readable sidecar."""
    path = save_corpus(tmp_path / "c.corp", tiny_corpus)
    assert corpora_equal(load_corpus(path), tiny_corpus)
    lines = sidecar_path(path).read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"{tiny_corpus[0].id}\t{tiny_corpus[0].transcript.text}"
    assert len(lines) == len(tiny_corpus)


def test_save_is_byte_deterministic(tiny_spec, tmp_path):
    a = save_corpus(tmp_path / "a.corp", generate_corpus(tiny_spec))
    b = save_corpus(tmp_path / "b.corp", generate_corpus(tiny_spec))
    assert a.read_bytes() == b.read_bytes()


def test_truncated_corpus_names_record(tiny_corpus, tmp_path):
    path = save_corpus(tmp_path / "c.corp", tiny_corpus)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError) as excinfo:
        load_corpus(path)
    assert excinfo.value.record_id == tiny_corpus[-1].id


def test_trailing_bytes_rejected(tiny_corpus, tmp_path):
    path = save_corpus(tmp_path / "c.corp", tiny_corpus)
    path.write_bytes(path.read_bytes() + b"\x01")
    with pytest.raises(FormatError):
        load_corpus(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "c.corp"
    path.write_bytes(b"XXXXXXXX" + b"\x00" * 16)
    with pytest.raises(FormatError):
        load_corpus(path)


def test_missing_corpus_file(tmp_path):
    with pytest.raises(DataError):
        load_corpus(tmp_path / "absent.corp")


def test_out_of_vocabulary_transcript_rejected_on_load(tiny_corpus, tmp_path):
    """Digits and non-ASCII letters survive saving and fail loading with the utterance id."""
    bad = Utterance("bad-utt", tiny_corpus[0].features, Transcript.from_text("ab1 café"))
    assert bad.transcript.words == ("AB1", "CAFÉ")
    path = save_corpus(tmp_path / "c.corp", tiny_corpus[:2] + [bad])
    with pytest.raises(DataError) as excinfo:
        load_corpus(path)
    assert not isinstance(excinfo.value, FormatError)
    assert excinfo.value.record_id == "bad-utt"


def test_more_noise_does_not_lower_unadapted_wer(trained_tiny):
    """Sign test over 5 noise seeds: a larger δ never helps the source model in most seeds."""
    model, corpus = trained_tiny
    levels = (0.0, 0.8, 2.0)
    for lower, higher in zip(levels, levels[1:]):
        not_lower = 0
        for seed in range(5):
            at_lower = evaluate_wer(model, shift_corpus(corpus, noise_delta=lower, seed=seed))
            at_higher = evaluate_wer(model, shift_corpus(corpus, noise_delta=higher, seed=seed))
            not_lower += at_higher >= at_lower
        assert not_lower >= 4
