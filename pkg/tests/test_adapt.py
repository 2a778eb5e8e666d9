"""Tests for the optimizer, adaptation settings and the per-utterance adapters."""

import math

import numpy as np
import pytest

from src.adapt import (
    DEFAULT_LEARNING_RATES,
    AdamW,
    AdamWHyper,
    AdaptConfig,
    AdaptMethod,
    NoAdapter,
    OptState,
    SdplAdapter,
    SutaAdapter,
    adamw_step,
    get_adapter,
    sdpl_adapt,
    suta_adapt,
)
from src.corpus import Utterance
from src.eval import Transcript
from src.eval.decoding import best_path, greedy_ctc_decode
from src.losses import combined_loss
from src.model import ParamSelection, forward, parameter_digest, partition_params, predict_logits, snapshot
from src.utils.errors import ContractViolation


def with_head_bias(model, index: int, shift: float):
    """Copy of `model` with one class's output bias raised by `shift`."""
    biased = snapshot(model)
    bias = biased.params["head.bias"].copy()
    bias[0, index] += shift
    biased.params["head.bias"] = bias
    return biased


# -- AdamW --------------------------------------------------------------------

def test_adamw_matches_hand_unrolled_steps():
    """Two scalar steps against the update rule written out by hand."""
    hyper = AdamWHyper(lr=0.1, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01)
    p, m, v = 1.0, 0.0, 0.0
    state = OptState()
    params = {"w": np.array([[1.0]])}
    for t, g in enumerate((0.5, -0.2), start=1):
        p *= 1 - 0.1 * 0.01
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        p -= 0.1 * (m / (1 - 0.9 ** t)) / (math.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        params, state = adamw_step(params, {"w": np.array([[g]])}, state, hyper)
        assert params["w"][0, 0] == pytest.approx(p, abs=1e-12)
    assert state.step == 2


def test_adamw_zero_gradient_only_decays():
    """With g = 0 the update is pure weight decay."""
    hyper = AdamWHyper(lr=0.01, weight_decay=0.1)
    params = {"w": np.full((2, 2), 3.0)}
    updated, _ = adamw_step(params, {"w": np.zeros((2, 2))}, OptState(), hyper)
    np.testing.assert_allclose(updated["w"], 3.0 * (1 - 0.01 * 0.1))


def test_adamw_rejects_missing_or_misshaped_gradient():
    params = {"w": np.ones((2, 2))}
    with pytest.raises(ContractViolation):
        adamw_step(params, {}, OptState(), AdamWHyper())
    with pytest.raises(ContractViolation):
        adamw_step(params, {"w": np.ones((1, 2))}, OptState(), AdamWHyper())


def test_adamw_updates_only_trainable(tiny_model):
    """Frozen arrays are the same objects after a step."""
    model = partition_params(snapshot(tiny_model), ParamSelection.LN)
    frozen_before = {name: model.params[name] for name in model.frozen}
    grads = {name: np.ones_like(model.params[name]) for name in model.trainable}
    AdamW(AdamWHyper(lr=0.01)).step(model, grads)
    for name, values in frozen_before.items():
        assert model.params[name] is values
    assert not np.array_equal(model.params["enc.0.ln.beta"], tiny_model.params["enc.0.ln.beta"])


# -- AdaptConfig --------------------------------------------------------------

def test_adapt_config_defaults():
    config = AdaptConfig()
    assert config.method is AdaptMethod.SUTA
    assert (config.alpha, config.temperature, config.iterations) == (0.3, 2.5, 10)
    assert config.params is ParamSelection.LN_FEAT
    assert config.learning_rate == DEFAULT_LEARNING_RATES[ParamSelection.LN_FEAT] == 2e-5


def test_adapt_config_sdpl_defaults_to_layer_norm():
    assert AdaptConfig(method=AdaptMethod.SDPL).params is ParamSelection.LN


def test_adapt_config_learning_rate_table():
    """Per-selection defaults, scaled by lr_scale, overridden by lr."""
    assert AdaptConfig(params=ParamSelection.LN).learning_rate == 2e-4
    assert AdaptConfig(params=ParamSelection.ALL).learning_rate == 1e-6
    assert AdaptConfig(params=ParamSelection.FEAT, lr_scale=10).learning_rate == pytest.approx(2e-4)
    assert AdaptConfig(params=ParamSelection.FEAT, lr=0.5, lr_scale=10).learning_rate == 0.5


def test_adapt_config_build_validates():
    """Out-of-range values raise ContractViolation; None means default."""
    with pytest.raises(ContractViolation):
        AdaptConfig.build(alpha=1.5)
    with pytest.raises(ContractViolation):
        AdaptConfig.build(temperature=0.5)
    with pytest.raises(ContractViolation):
        AdaptConfig.build(iterations=-1)
    assert AdaptConfig.build(alpha=None).alpha == 0.3


def test_adapt_config_label():
    assert AdaptConfig(method=AdaptMethod.NONE).label() == "none"
    assert AdaptConfig().label() == "alpha=0.3 T=2.5 params=ln+feat N=10 lr=2e-05"
    assert AdaptConfig(method=AdaptMethod.SDPL).label() == "params=ln N=10 lr=0.0002"


# -- adapters -----------------------------------------------------------------

def test_get_adapter_dispatch():
    assert isinstance(get_adapter(AdaptConfig(method=AdaptMethod.NONE)), NoAdapter)
    assert isinstance(get_adapter(AdaptConfig()), SutaAdapter)
    assert isinstance(get_adapter(AdaptConfig(method=AdaptMethod.SDPL)), SdplAdapter)


def test_adapter_rejects_other_method():
    with pytest.raises(ContractViolation):
        SutaAdapter(AdaptConfig(method=AdaptMethod.SDPL))


def test_suta_zero_iterations_is_greedy_decode(tiny_model, tiny_corpus):
    """N = 0 returns the unadapted greedy transcript and a single record."""
    utterance = tiny_corpus[0]
    hypothesis, trace = suta_adapt(tiny_model, utterance, AdaptConfig(iterations=0))
    assert hypothesis == greedy_ctc_decode(predict_logits(tiny_model, utterance.features))
    assert len(trace) == 1
    assert trace.records[0].iteration == 0


def test_suta_trace_has_n_plus_one_records(tiny_model, tiny_corpus):
    _, trace = suta_adapt(tiny_model, tiny_corpus[0], AdaptConfig(iterations=4))
    assert [r.iteration for r in trace.records] == [0, 1, 2, 3, 4]
    assert all(r.loss is not None for r in trace.records)


def test_suta_first_record_is_unadapted_loss(tiny_model, tiny_corpus):
    """Record 0 reports the combined loss of the source model."""
    utterance = tiny_corpus[1]
    config = AdaptConfig(iterations=3, alpha=0.3, temperature=2.5)
    _, trace = suta_adapt(tiny_model, utterance, config)
    expected = combined_loss(forward(tiny_model, utterance.features).logits, 0.3, 2.5)
    first = trace.records[0]
    assert first.loss == pytest.approx(expected.loss.item(), abs=1e-12)
    assert first.entropy == pytest.approx(expected.entropy, abs=1e-12)
    assert first.mcc == pytest.approx(expected.mcc, abs=1e-12)
    assert first.retained_frames == expected.retained_frames
    assert first.total_frames == expected.total_frames


def test_suta_is_episodic(tiny_model, tiny_corpus):
    """The source is untouched and frozen parameters never move."""
    before = parameter_digest(tiny_model)
    result = SutaAdapter(AdaptConfig(iterations=5, lr=1e-2)).adapt(tiny_model, tiny_corpus[0])
    assert parameter_digest(tiny_model) == before
    assert result.start_digest == before
    assert result.frozen_digest_before == result.frozen_digest_after
    assert result.changed_params > 0


def test_suta_is_deterministic(tiny_model, tiny_corpus):
    config = AdaptConfig(iterations=3, lr=1e-2)
    a = SutaAdapter(config).adapt(tiny_model, tiny_corpus[2])
    b = SutaAdapter(config).adapt(tiny_model, tiny_corpus[2])
    assert a.hypothesis == b.hypothesis
    assert a.trace == b.trace


def test_suta_order_does_not_leak(tiny_model, tiny_corpus):
    """Adapting to another utterance first does not change the result."""
    adapter = SutaAdapter(AdaptConfig(iterations=3, lr=1e-2))
    alone = adapter.adapt(tiny_model, tiny_corpus[3])
    adapter.adapt(tiny_model, tiny_corpus[4])
    again = adapter.adapt(tiny_model, tiny_corpus[3])
    assert alone.trace == again.trace


def test_suta_all_blank_still_updates(tiny_model, tiny_corpus):
    """With every frame blank-dominant the MCC term still drives updates."""
    model = with_head_bias(tiny_model, 0, 10.0)
    result = SutaAdapter(AdaptConfig(iterations=2, lr=1e-2)).adapt(model, tiny_corpus[0])
    first = result.trace.records[0]
    assert first.retained_frames == 0
    assert first.entropy == 0.0
    assert first.mcc > 0.0
    assert result.changed_params > 0
    assert result.retained_fraction == 0.0


def test_sdpl_rejects_non_layer_norm_selection():
    with pytest.raises(ContractViolation):
        SdplAdapter(AdaptConfig(method=AdaptMethod.SDPL, params=ParamSelection.ALL))


def test_sdpl_override_allows_any_selection():
    adapter = SdplAdapter(
        AdaptConfig(method=AdaptMethod.SDPL, params=ParamSelection.FEAT, sdpl_allow_any_params=True)
    )
    assert adapter.selection is ParamSelection.FEAT


def test_sdpl_skips_empty_pseudo_label(tiny_model, tiny_corpus):
    """An all-blank decode gives an empty label and no update at all."""
    model = with_head_bias(tiny_model, 0, 1e3)
    result = SdplAdapter(AdaptConfig(method=AdaptMethod.SDPL, iterations=3)).adapt(model, tiny_corpus[0])
    assert all(r.skipped and r.loss is None for r in result.trace.records)
    assert all(r.pseudo_label == "" for r in result.trace.records)
    assert result.hypothesis.words == ()
    assert result.changed_params == 0


def test_sdpl_uses_greedy_pseudo_label(tiny_model, tiny_corpus):
    """A dominant "A" class yields the pseudo label "A" and a finite CTC loss."""
    model = with_head_bias(tiny_model, 2, 1e3)
    hypothesis, trace = sdpl_adapt(model, tiny_corpus[0], AdaptConfig(method=AdaptMethod.SDPL, iterations=1))
    first = trace.records[0]
    assert first.pseudo_label == "A"
    assert not first.skipped
    assert math.isfinite(first.loss)
    assert hypothesis.text == "A"


def test_result_carries_config_seed(tiny_model, tiny_corpus):
    result = SutaAdapter(AdaptConfig(iterations=0, seed=7)).adapt(tiny_model, tiny_corpus[0])
    assert result.seed == 7


def test_no_adapter_is_plain_decoding(tiny_model, tiny_corpus):
    utterance = tiny_corpus[0]
    result = NoAdapter(AdaptConfig(method=AdaptMethod.NONE, iterations=10)).adapt(tiny_model, utterance)
    assert len(result.trace) == 1
    assert result.hypothesis == greedy_ctc_decode(predict_logits(tiny_model, utterance.features))
    assert result.changed_params == 0
    assert result.report is not None
    assert result.report.ref_words == len(utterance.transcript)


@pytest.mark.parametrize("method", list(AdaptMethod))
def test_retained_fraction_recorded_for_every_method(tiny_model, tiny_corpus, method):
    """Every method reports the share of frames whose argmax is not blank."""
    utterance = tiny_corpus[1]
    path = best_path(predict_logits(tiny_model, utterance.features))
    result = get_adapter(AdaptConfig(method=method, iterations=2)).adapt(tiny_model, utterance)
    first = result.trace.records[0]
    assert first.total_frames == len(path)
    assert first.retained_frames == int((path != 0).sum())

    dominant = with_head_bias(tiny_model, 2, 1e3)
    assert get_adapter(AdaptConfig(method=method, iterations=2)).adapt(dominant, utterance).retained_fraction == 1.0


def test_sdpl_correct_pseudo_label_keeps_zero_wer(tiny_model, tiny_corpus):
    """When the pseudo label already equals the reference, WER stays 0 throughout."""
    model = with_head_bias(tiny_model, 2, 1e3)
    utterance = Utterance("only-a", tiny_corpus[0].features, Transcript.from_text("A"))
    result = SdplAdapter(AdaptConfig(method=AdaptMethod.SDPL, iterations=3, lr=1e-2)).adapt(model, utterance)
    assert [r.pseudo_label for r in result.trace.records] == ["A"] * 4
    assert [r.wer for r in result.trace.records] == [0.0] * 4
    assert result.report.wer == 0.0


def test_adapting_trained_model_records_wer(trained_tiny):
    """Every record carries the WER of its own hypothesis."""
    model, corpus = trained_tiny
    result = SutaAdapter(AdaptConfig(iterations=3)).adapt(model, corpus[0])
    assert all(r.wer is not None and r.wer >= 0 for r in result.trace.records)
    assert result.trace.wer_curve()[-1] == result.report.wer
