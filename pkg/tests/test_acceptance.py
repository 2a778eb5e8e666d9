"""End-to-end runs on the default experiment over several seeds.

These train a source model per seed and adapt every test corpus, so they
are marked slow: `pytest -m slow` runs them, `pytest -m "not slow"` skips them.
"""

import statistics

import numpy as np
import pytest

from src.adapt import AdaptMethod
from src.corpus import load_corpus
from src.harness import (
    ExperimentConfig,
    cmd_adapt,
    cmd_calibrate,
    cmd_gen_corpus,
    cmd_length_analysis,
    cmd_train,
    run_adaptation,
)
from src.model import load_checkpoint
from src.utils.config import DEFAULT_EXPERIMENT_CONFIG

pytestmark = pytest.mark.slow

SEEDS = range(5)
HIGH = "high"


class SeedRun:
    """Artifacts of one seed's full pipeline."""

    def __init__(self, experiment, train_log, table, lengths):
        self.experiment = experiment
        self.train_log = train_log
        self.frame = table.frame()
        self.lengths = lengths
        self.source = load_checkpoint(experiment.checkpoint_path)
        self.high = load_corpus(experiment.corpus_path("test", HIGH))

    def row(self, tag: str, method: str):
        rows = self.frame[(self.frame["tag"] == tag) & (self.frame["method"] == method)]
        return rows.iloc[0]


@pytest.fixture(scope="module")
def seed_runs(tmp_path_factory):
    runs = []
    for seed in SEEDS:
        output_dir = tmp_path_factory.mktemp(f"seed{seed}")
        experiment = ExperimentConfig.from_file(DEFAULT_EXPERIMENT_CONFIG, output_dir=output_dir, seed=seed)
        cmd_gen_corpus(experiment)
        _, train_log = cmd_train(experiment)
        cmd_calibrate(experiment)

        # reload so the calibrated noise levels apply, then regenerate the shifted corpora
        experiment = ExperimentConfig.from_file(DEFAULT_EXPERIMENT_CONFIG, output_dir=output_dir, seed=seed)
        cmd_gen_corpus(experiment)
        table = cmd_adapt(experiment)
        lengths = cmd_length_analysis(experiment)
        runs.append(SeedRun(experiment, train_log, table, lengths))
    return runs


def corpus_wer_at(results, iteration: int) -> float:
    errors = sum(r.trace.records[iteration].wer * r.report.ref_words for r in results)
    return errors / sum(r.report.ref_words for r in results)


def test_source_model_trains(seed_runs):
    """Held-out clean WER under 15% with a mostly non-increasing loss."""
    for run in seed_runs:
        assert run.train_log.heldout_wer[-1] < 0.15
        assert run.train_log.monotone_fraction >= 0.9


def test_suta_reduces_high_shift_wer(seed_runs):
    """Default SUTA reaches WERR >= 10% on the high-shift corpus in at least 4 of 5 seeds."""
    werrs = [run.row(HIGH, "suta")["werr"] for run in seed_runs]
    assert sum(w >= 0.10 for w in werrs) >= 4


def test_suta_beats_sdpl(seed_runs):
    suta = np.mean([run.row(HIGH, "suta")["werr"] for run in seed_runs])
    sdpl = np.mean([run.row(HIGH, "sdpl")["werr"] for run in seed_runs])
    assert suta > sdpl >= 0


def test_suta_does_no_harm_in_domain(seed_runs):
    """On clean data the adapted WER stays within half a point of the baseline."""
    for run in seed_runs:
        assert run.row("clean", "suta")["wer"] <= run.row("clean", "none")["wer"] + 0.005


def test_temperature_smoothing_helps(seed_runs):
    werr = {1.0: [], 2.5: []}
    for run in seed_runs:
        baseline = run.row(HIGH, "none")["wer"]
        for temperature in werr:
            config = run.experiment.adapt_config(AdaptMethod.SUTA, temperature=temperature)
            results = run_adaptation(run.source, run.high, config, jobs=run.experiment.jobs)
            adapted = corpus_wer_at(results, -1)
            werr[temperature].append((baseline - adapted) / baseline)
    assert np.mean(werr[2.5]) > np.mean(werr[1.0])


def test_iteration_curves(seed_runs):
    """WER at step 10 is no worse than at step 1, and T=2.5 degrades less by step 20."""
    at_1, at_10 = [], []
    drift = {1.0: [], 2.5: []}
    for run in seed_runs:
        for temperature in drift:
            config = run.experiment.adapt_config(AdaptMethod.SUTA, temperature=temperature, iterations=20)
            results = run_adaptation(run.source, run.high, config, jobs=run.experiment.jobs)
            curve = [corpus_wer_at(results, t) for t in range(21)]
            drift[temperature].append(curve[20] - min(curve))
            if temperature == 2.5:
                at_1.append(curve[1])
                at_10.append(curve[10])
    assert statistics.median(at_10) <= statistics.median(at_1)
    assert np.mean(drift[2.5]) <= np.mean(drift[1.0])


def test_no_length_bucket_is_hurt(seed_runs):
    """Pooled over seeds, short and long utterances both gain from SUTA."""
    pooled = {}
    for run in seed_runs:
        rows = run.lengths[(run.lengths["tag"] == HIGH) & run.lengths["method"].isin(["none", "suta"])]
        for row in rows.itertuples():
            errors, words = pooled.get((row.method, row.bucket), (0, 0))
            pooled[(row.method, row.bucket)] = (errors + row.errors, words + row.ref_words)
    buckets = {bucket for _, bucket in pooled}
    assert buckets
    for bucket in buckets:
        base_errors, base_words = pooled[("none", bucket)]
        suta_errors, suta_words = pooled[("suta", bucket)]
        assert suta_errors / suta_words <= base_errors / base_words
