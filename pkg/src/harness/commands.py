"""Harness commands behind the CLI: corpora, training, adaptation, sweeps, analyses."""

import itertools
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import pandas as pd

from ..adapt import AdaptConfig, AdaptMethod, AdaptResult, get_adapter
from ..corpus import Corpus, generate_corpus, load_corpus, save_corpus, shift_corpus
from ..model import ModelState, TrainingLog, evaluate_wer, init_model, load_checkpoint, save_checkpoint, train_source
from ..utils.config import config as env_config
from ..utils.errors import ContractViolation, DataError
from ..utils.hashing import file_digest
from ..utils.logger import add_file_handler, get_logger
from .experiment import CALIBRATION_FILE, ExperimentConfig
from .results import ResultsTable, length_buckets, round_sig, write_csv, write_json
from .runner import run_adaptation

logger = get_logger(__name__)


@contextmanager
def _run_log(experiment: ExperimentConfig, command: str) -> Iterator[None]:
    """Mirror log records into <output_dir>/run.log for the duration of a command."""
    handler = add_file_handler(experiment.output_dir / "run.log", level=env_config.log_level)
    logger.info(f"{command}: started (seed {experiment.seed}, output {experiment.output_dir})")
    try:
        yield
        logger.info(f"{command}: finished")
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()


def _load_source(experiment: ExperimentConfig) -> ModelState:
    return load_checkpoint(experiment.checkpoint_path)


def cmd_gen_corpus(experiment: ExperimentConfig) -> Dict[str, Path]:
    """
    Generate and save every corpus an experiment uses.

    Writes train, heldout, test_clean and, for each configured shift tag,
    dev_<tag> and test_<tag>. Dev corpora come from their own seed so sweep
    choices are never made on the test utterances.

    Returns:
        Corpus name → written path
    """
    written: Dict[str, Path] = {}
    with _run_log(experiment, "gen-corpus"):
        for split in ("train", "heldout"):
            corpus = generate_corpus(experiment.corpus_spec(split))
            written[split] = save_corpus(experiment.corpus_path(split), corpus)

        for split in ("test", "dev"):
            clean = generate_corpus(experiment.corpus_spec(split))
            if split == "test":
                written["test_clean"] = save_corpus(experiment.corpus_path(split, "clean"), clean)
            for tag, shift in experiment.shifts.items():
                shifted = shift_corpus(
                    clean,
                    noise_delta=shift.noise_delta,
                    gain_sigma=shift.gain_sigma,
                    offset_sigma=shift.offset_sigma,
                    seed=experiment.shift_seed(split),
                    domain_tag=tag,
                )
                written[f"{split}_{tag}"] = save_corpus(experiment.corpus_path(split, tag), shifted)

        for name, path in written.items():
            logger.info(f"Wrote {name}: {path}")
    return written


def cmd_train(experiment: ExperimentConfig) -> Tuple[Path, TrainingLog]:
    """
    Train the source model on the clean training corpus.

    Returns:
        (checkpoint path, training log)

    Raises:
        DataError: If the training corpus is missing or has out-of-vocabulary text
    """
    with _run_log(experiment, "train"):
        corpus = load_corpus(experiment.corpus_path("train"))
        heldout_path = experiment.corpus_path("heldout")
        heldout = load_corpus(heldout_path) if heldout_path.exists() else None

        initial = init_model(experiment.model.model_copy(update={"seed": experiment.seed}))
        settings = experiment.training
        model, log = train_source(
            initial,
            corpus,
            epochs=settings.epochs,
            lr=settings.lr,
            batch_size=settings.batch_size,
            weight_decay=settings.weight_decay,
            seed=experiment.seed,
            heldout=heldout,
        )
        path = save_checkpoint(experiment.checkpoint_path, model)
        digest = file_digest(path)
        write_json(
            {
                "checkpoint": str(path),
                "sha256": digest,
                "epoch_losses": [round_sig(x) for x in log.epoch_losses],
                "heldout_wer": [round_sig(x) for x in log.heldout_wer],
            },
            experiment.output_dir / "train_log.json",
        )
        logger.info(f"Checkpoint sha256 {digest}")
    return path, log


def _adapt_corpus(
    table: ResultsTable,
    source: ModelState,
    corpus: Corpus,
    tag: str,
    config: AdaptConfig,
    jobs: int
) -> List[AdaptResult]:
    results = run_adaptation(source, corpus, config, jobs=jobs)
    table.add(tag, config.method.value, config.label(), results)
    return results


def _with_baseline_first(methods: List[AdaptMethod]) -> List[AdaptMethod]:
    ordered = [AdaptMethod.NONE] + [m for m in methods if m is not AdaptMethod.NONE]
    return list(dict.fromkeys(ordered))


def cmd_adapt(experiment: ExperimentConfig) -> ResultsTable:
    """
    Adapt to every test corpus with every configured method.

    A baseline (method none) row is always produced for each corpus tag.
    Writes adapt.csv, adapt.json, adapt_utterances.csv, optional
    adapt_curves.csv and, when `save_traces` is on, adapt_traces.json.

    Returns:
        The results table

    Raises:
        DataError: If the checkpoint or a test corpus is missing
    """
    table = ResultsTable()
    traces: Dict[str, Dict[str, Dict[str, list]]] = {}
    with _run_log(experiment, "adapt"):
        source = _load_source(experiment)
        for tag in experiment.test_tags:
            corpus = load_corpus(experiment.corpus_path("test", tag))
            for method in _with_baseline_first(experiment.methods):
                config = experiment.adapt_config(method)
                results = _adapt_corpus(table, source, corpus, tag, config, experiment.jobs)
                if experiment.save_traces:
                    traces.setdefault(tag, {})[method.value] = {
                        r.utterance_id: [
                            {k: round_sig(v) for k, v in rec.model_dump().items()}
                            for rec in r.trace.records
                        ]
                        for r in results
                    }

        table.write(experiment.output_dir, "adapt", curves=experiment.curves)
        if experiment.save_traces:
            write_json(traces, experiment.output_dir / "adapt_traces.json")
    return table


def sweep_points(experiment: ExperimentConfig) -> List[AdaptConfig]:
    """
    Every distinct adaptation config on the sweep grid.

    Points with the same label (SDPL ignores α and T) are kept once. SDPL
    points with a non-LN selection are skipped unless explicitly allowed.
    """
    axes = experiment.sweep
    points: Dict[str, AdaptConfig] = {}
    grid = itertools.product(axes.method, axes.alpha, axes.temperature, axes.iterations, axes.params)
    for method, alpha, temperature, iterations, params in grid:
        if method is AdaptMethod.NONE:
            continue
        try:
            config = experiment.adapt_config(
                method, alpha=alpha, temperature=temperature, iterations=iterations, params=params
            )
            get_adapter(config)
        except ContractViolation as e:
            logger.warning(f"Skipping sweep point {method.value}/{params.value}: {e}")
            continue
        points.setdefault(f"{method.value} {config.label()}", config)
    return list(points.values())


def cmd_sweep(experiment: ExperimentConfig) -> ResultsTable:
    """
    Run every sweep point on the dev corpora.

    Writes sweep.csv, sweep.json, sweep_utterances.csv and, with curves on,
    sweep_curves.csv (N+1 rows per utterance and point).

    Raises:
        ContractViolation: If the grid has no runnable point
    """
    points = sweep_points(experiment)
    if not points:
        raise ContractViolation("sweep grid has no runnable adaptation point")

    table = ResultsTable()
    with _run_log(experiment, "sweep"):
        source = _load_source(experiment)
        baseline = experiment.adapt_config(AdaptMethod.NONE)
        for tag in experiment.sweep_tags:
            corpus = load_corpus(experiment.corpus_path("dev", tag))
            _adapt_corpus(table, source, corpus, tag, baseline, experiment.jobs)
            for config in points:
                _adapt_corpus(table, source, corpus, tag, config, experiment.jobs)
        table.write(experiment.output_dir, "sweep", curves=experiment.curves)
    return table


def cmd_length_analysis(experiment: ExperimentConfig, utterances_csv: Optional[Path] = None) -> pd.DataFrame:
    """
    Bucket adapted utterances by duration and report WER/WERR per bucket.

    Reads adapt_utterances.csv (written by cmd_adapt) unless another file is
    given. Writes length_analysis.csv and length_analysis.json.

    Raises:
        DataError: If the per-utterance results are missing
    """
    path = Path(utterances_csv) if utterances_csv else experiment.output_dir / "adapt_utterances.csv"
    if not path.exists():
        raise DataError(f"Per-utterance results not found: {path} (run adapt first)")

    with _run_log(experiment, "length-analysis"):
        utterances = pd.read_csv(path, keep_default_na=False, na_values=[""])
        fps = experiment.corpus_spec("test").frames_per_second
        thresholds = [int(round(s * fps)) for s in experiment.length_thresholds_seconds]
        report = length_buckets(utterances, thresholds)

        write_csv(report, experiment.output_dir / "length_analysis.csv")
        write_json(
            [{k: round_sig(v) for k, v in row.items()} for row in report.to_dict(orient="records")],
            experiment.output_dir / "length_analysis.json",
        )
        for row in report.itertuples():
            logger.info(
                f"[{row.tag}] {row.method} {row.bucket}: {row.utterances} utt, "
                f"WER {100 * row.wer:.2f}%, WERR {100 * row.werr:.1f}%"
            )
    return report


def pick_level(
    measure: Callable[[float], float],
    grid: List[float],
    target: Tuple[float, float],
    refine_steps: int = 0,
    name: str = "level",
) -> float:
    """
    Pick the noise level whose relative WER increase lands in `target`.

    Grid points inside the band win, nearest the band's middle first. When the
    increase jumps over the band between two neighbouring grid points, that
    interval is bisected for up to `refine_steps` extra evaluations. Otherwise
    the level nearest the middle is returned with a warning.

    Args:
        measure: Relative WER increase at a noise level (callers cache it)
        grid: Noise levels to evaluate, ascending
        target: (low, high) band for the relative increase
        refine_steps: Bisection budget
        name: Level name for log messages

    Returns:
        The chosen noise level
    """
    low, high = target
    middle = (low + high) / 2
    increases = [measure(d) for d in grid]
    inside = [(abs(r - middle), d) for d, r in zip(grid, increases) if low <= r <= high]
    if inside:
        return min(inside)[1]

    evaluated = list(zip(grid, increases))
    for (left, r_left), (right, r_right) in zip(evaluated, evaluated[1:]):
        if r_left < low and r_right > high:
            for _ in range(refine_steps):
                mid = round((left + right) / 2, 6)
                r_mid = measure(mid)
                evaluated.append((mid, r_mid))
                if low <= r_mid <= high:
                    logger.info(f"{name}: refined delta={mid:g} (+{100 * r_mid:.0f}% relative)")
                    return mid
                if r_mid < low:
                    left = mid
                else:
                    right = mid
            break

    fallback = min((abs(r - middle), d) for d, r in evaluated)[1]
    logger.warning(
        f"{name}: no noise level reaches the target band [{low:g}, {high:g}]; "
        f"using nearest delta={fallback:g}"
    )
    return fallback


def cmd_calibrate(experiment: ExperimentConfig) -> Dict[str, object]:
    """
    Choose the low/high noise levels from the unadapted model's WER.

    Evaluates the clean test corpus under the noise levels of the grid and
    picks each level with `pick_level`, bisecting between grid points when
    the grid steps over a target band. The relative increase uses a 5% floor
    on the clean WER. Writes calibration.json, which later commands pick up
    for the "low" and "high" shifts.

    Returns:
        The calibration record
    """
    with _run_log(experiment, "calibrate"):
        source = _load_source(experiment)
        clean = load_corpus(experiment.corpus_path("test", "clean"))
        clean_wer = evaluate_wer(source, clean)
        floor = max(clean_wer, 0.05)
        settings = experiment.calibration

        wers: Dict[float, float] = {}

        def measure(delta: float) -> float:
            if delta not in wers:
                noisy = shift_corpus(clean, noise_delta=delta, seed=experiment.shift_seed("test"))
                wers[delta] = evaluate_wer(source, noisy)
                logger.info(
                    f"delta={delta:g}: WER {100 * wers[delta]:.2f}% "
                    f"(+{100 * (wers[delta] - clean_wer) / floor:.0f}% relative)"
                )
            return (wers[delta] - clean_wer) / floor

        grid = sorted(settings.grid)
        low = pick_level(measure, grid, settings.low_target, settings.refine_steps, "low")
        high = pick_level(measure, grid, settings.high_target, settings.refine_steps, "high")

        levels = sorted(wers)
        record = {
            "clean_wer": round_sig(clean_wer),
            "levels": levels,
            "wer": [round_sig(wers[d]) for d in levels],
            "relative_increase": [round_sig((wers[d] - clean_wer) / floor) for d in levels],
            "low": low,
            "high": high,
        }
        write_json(record, experiment.output_dir / CALIBRATION_FILE)
        logger.info(f"Calibrated noise levels: low={low:g}, high={high:g}")
    return record
