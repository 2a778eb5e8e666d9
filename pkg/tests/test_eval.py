"""Tests for transcripts, greedy CTC decoding and error-rate metrics."""

import functools
import itertools

import numpy as np
import pytest

from src.eval import (
    BLANK_INDEX,
    VOCAB,
    Transcript,
    WerReport,
    canonicalize,
    cer,
    corpus_wer,
    decode_tokens,
    encode_transcript,
    greedy_ctc_decode,
    wer,
    werr,
)
from src.eval.decoding import collapse_path
from src.utils.errors import DataError

A, B = VOCAB.index("A"), VOCAB.index("B")


def one_hot_logits(path):
    logits = np.zeros((len(path), len(VOCAB)))
    logits[np.arange(len(path)), path] = 5.0
    return logits


def t(text: str) -> Transcript:
    return Transcript.from_text(text)


# -- transcripts ----------------------------------------------------------------

def test_canonicalize():
    assert canonicalize("  hello,   World!\tdon't ") == "HELLO WORLD DON'T"
    assert canonicalize("...") == ""


def test_canonicalize_keeps_out_of_vocabulary_letters_and_digits():
    """Only punctuation is dropped; encoding is what rejects foreign symbols."""
    assert canonicalize("r2-d2, café_au lait") == "R2D2 CAFÉAU LAIT"
    with pytest.raises(DataError):
        encode_transcript(t("room 101"), "utt-2")


def test_transcript_from_text():
    assert t("the cat").words == ("THE", "CAT")
    assert t("   ").words == ()
    assert t("a  b").text == "A B"


def test_encode_decode():
    ids = encode_transcript(t("AB C"))
    assert BLANK_INDEX not in ids
    assert decode_tokens(ids) == "AB C"


def test_encode_out_of_vocabulary():
    with pytest.raises(DataError) as excinfo:
        encode_transcript(Transcript(words=("A9",)), "utt-1")
    assert excinfo.value.record_id == "utt-1"


# -- greedy decoding --------------------------------------------------------------

def test_greedy_merges_repeats_then_drops_blanks():
    """[A, A, blank, B] decodes to "AB"."""
    assert greedy_ctc_decode(one_hot_logits([A, A, BLANK_INDEX, B])).text == "AB"


def test_greedy_blank_separates_repeats():
    """[A, blank, A] decodes to "AA"."""
    assert greedy_ctc_decode(one_hot_logits([A, BLANK_INDEX, A])).text == "AA"


def test_greedy_all_blank_is_empty():
    assert greedy_ctc_decode(one_hot_logits([BLANK_INDEX] * 4)).words == ()


def test_greedy_ties_go_to_lowest_class():
    """A uniform row is a blank frame."""
    assert greedy_ctc_decode(np.zeros((3, len(VOCAB)))).words == ()


@pytest.mark.parametrize("seed", range(50))
def test_greedy_invariant_to_scaling_and_frame_offsets(seed):
    """Positive scaling of the logits or adding a constant to a frame leaves the decode unchanged."""
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal((12, len(VOCAB))) * 3
    expected = greedy_ctc_decode(logits)
    for factor in (0.1, 0.5, 2.5, 40.0):
        assert greedy_ctc_decode(logits / factor) == expected
    offsets = rng.uniform(-100, 100, size=(12, 1))
    assert greedy_ctc_decode(logits + offsets) == expected


def test_collapse_path_is_idempotent_on_clean_paths():
    assert collapse_path([A, B, A]) == [A, B, A]


# -- WER ------------------------------------------------------------------------

def test_wer_examples():
    assert wer(t("a b c"), t("a b c")).wer == 0.0
    report = wer(t("a b c"), t("a x c d"))
    assert (report.substitutions, report.deletions, report.insertions) == (1, 0, 1)
    assert report.wer == pytest.approx(2 / 3)
    assert wer(t("a b"), t("")).deletions == 2
    assert wer(t("a"), t("b c d")).wer == 3.0


def test_wer_empty_reference():
    with pytest.raises(DataError):
        wer(t(""), t("a"))


@functools.lru_cache(maxsize=None)
def levenshtein(ref: tuple, hyp: tuple) -> int:
    """Recursive reference distance."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    return min(
        levenshtein(ref[1:], hyp[1:]) + (ref[0] != hyp[0]),
        levenshtein(ref[1:], hyp) + 1,
        levenshtein(ref, hyp[1:]) + 1,
    )


def test_wer_matches_levenshtein_exhaustively():
    """All word sequences of length <= 6 over {a, b}."""
    sequences = [s for n in range(7) for s in itertools.product("ab", repeat=n)]
    for ref, hyp in itertools.product(sequences, repeat=2):
        if not ref:
            continue
        report = wer(Transcript(words=tuple(x.upper() for x in ref)), Transcript(words=tuple(x.upper() for x in hyp)))
        assert report.errors == levenshtein(ref, hyp)
        assert report.deletions - report.insertions == len(ref) - len(hyp)


def test_corpus_wer_pools_counts():
    total = corpus_wer([wer(t("a b"), t("a")), wer(t("c d e f"), t("c d e f"))])
    assert total.ref_words == 6
    assert total.errors == 1
    assert total.wer == pytest.approx(1 / 6)
    assert corpus_wer([]) == WerReport()


def test_werr_examples():
    """31.2 -> 25.0 is about 19.87%; 31.2 -> 29.9 about 4.17%."""
    assert werr(0.312, 0.250) == pytest.approx(0.1987, abs=1e-4)
    assert werr(0.312, 0.299) == pytest.approx(0.0417, abs=1e-4)
    assert werr(0.2, 0.3) < 0


def test_werr_zero_baseline():
    with pytest.raises(DataError):
        werr(0.0, 0.1)


def test_cer():
    assert cer(t("ab"), t("ab")) == 0.0
    assert cer(t("ab cd"), t("ab cx")) == pytest.approx(1 / 5)
    with pytest.raises(DataError):
        cer(t(""), t("a"))
