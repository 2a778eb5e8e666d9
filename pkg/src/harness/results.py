"""Results tables: corpus WER rows, WERR against the baseline, CSV/JSON output."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..adapt import AdaptResult
from ..eval.metrics import WerReport, corpus_wer, werr
from ..utils.errors import DataError
from ..utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.6g"
BASELINE_METHOD = "none"

RESULT_COLUMNS = [
    "tag", "method", "config", "utterances", "ref_words", "errors",
    "wer", "werr", "mean_retained_fraction",
]
UTTERANCE_COLUMNS = [
    "tag", "method", "config", "id", "seed", "duration_frames", "ref_words",
    "substitutions", "deletions", "insertions", "wer", "cer", "retained_fraction",
]
CURVE_COLUMNS = [
    "tag", "method", "config", "id", "iteration", "loss", "entropy", "mcc",
    "retained_frames", "wer", "skipped", "hypothesis",
]


def round_sig(value: Any, digits: int = 6) -> Any:
    """Round floats to `digits` significant digits; NaN becomes None."""
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return None
        return float(f"{value:.{digits}g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def safe_werr(baseline_wer: float, adapted_wer: float) -> float:
    """WERR, or NaN when the baseline has no errors."""
    try:
        return werr(baseline_wer, adapted_wer)
    except DataError:
        return float("nan")


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(payload: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


class ResultsTable:
    """
    Rows keyed by (tag, method, config) with corpus WER and WERR.

    Every tag needs a baseline row (method "none"); WERR of each row is
    computed against the baseline of its tag.
    """

    def __init__(self):
        self._rows: List[Dict[str, Any]] = []
        self._utterances: List[Dict[str, Any]] = []
        self._curves: List[Dict[str, Any]] = []

    def add(self, tag: str, method: str, config: str, results: Sequence[AdaptResult]) -> Dict[str, Any]:
        """Aggregate one adaptation run into a row (WERR is filled in by `frame`)."""
        total = corpus_wer(r.report for r in results if r.report is not None)
        retained = [r.retained_fraction for r in results]
        row = {
            "tag": tag,
            "method": method,
            "config": config,
            "utterances": len(results),
            "ref_words": total.ref_words,
            "errors": total.errors,
            "wer": total.wer,
            "mean_retained_fraction": float(np.mean(retained)) if retained else float("nan"),
        }
        self._rows.append(row)

        for r in results:
            report = r.report or WerReport()
            self._utterances.append({
                "tag": tag,
                "method": method,
                "config": config,
                "id": r.utterance_id,
                "seed": r.seed,
                "duration_frames": r.duration_frames,
                "ref_words": report.ref_words,
                "substitutions": report.substitutions,
                "deletions": report.deletions,
                "insertions": report.insertions,
                "wer": report.wer,
                "cer": r.cer,
                "retained_fraction": r.retained_fraction,
            })
            for record in r.trace.records:
                self._curves.append({
                    "tag": tag,
                    "method": method,
                    "config": config,
                    "id": r.utterance_id,
                    "iteration": record.iteration,
                    "loss": record.loss,
                    "entropy": record.entropy,
                    "mcc": record.mcc,
                    "retained_frames": record.retained_frames,
                    "wer": record.wer,
                    "skipped": record.skipped,
                    "hypothesis": record.hypothesis,
                })

        logger.info(f"[{tag}] {method} {config}: WER {100 * total.wer:.2f}% over {len(results)} utterances")
        return row

    def frame(self) -> pd.DataFrame:
        """Result rows with WERR against each tag's baseline."""
        frame = pd.DataFrame(self._rows, columns=[c for c in RESULT_COLUMNS if c != "werr"])
        baselines = frame[frame["method"] == BASELINE_METHOD].drop_duplicates("tag").set_index("tag")["wer"]
        missing = sorted(set(frame["tag"]) - set(baselines.index))
        if missing:
            raise DataError(f"no baseline row for corpus tag(s): {', '.join(missing)}")
        frame["werr"] = [safe_werr(baselines[t], w) for t, w in zip(frame["tag"], frame["wer"])]
        return frame[RESULT_COLUMNS]

    def utterance_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self._utterances, columns=UTTERANCE_COLUMNS)

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self._curves, columns=CURVE_COLUMNS)

    def baseline(self, tag: str) -> Optional[float]:
        for row in self._rows:
            if row["tag"] == tag and row["method"] == BASELINE_METHOD:
                return row["wer"]
        return None

    def records(self) -> List[Dict[str, Any]]:
        """Rows as JSON-ready dicts (floats rounded to 6 significant digits)."""
        return [
            {key: round_sig(value) for key, value in row.items()}
            for row in self.frame().to_dict(orient="records")
        ]

    def write(self, output_dir: Path, stem: str, curves: bool = False) -> Dict[str, Path]:
        """
        Write `<stem>.csv`, `<stem>.json` and `<stem>_utterances.csv`
        (plus `<stem>_curves.csv` when requested).
        """
        output_dir = Path(output_dir)
        written = {
            "csv": write_csv(self.frame(), output_dir / f"{stem}.csv"),
            "json": write_json(self.records(), output_dir / f"{stem}.json"),
            "utterances": write_csv(self.utterance_frame(), output_dir / f"{stem}_utterances.csv"),
        }
        if curves:
            written["curves"] = write_csv(self.curve_frame(), output_dir / f"{stem}_curves.csv")
        return written


def length_buckets(
    utterances: pd.DataFrame,
    thresholds_frames: Iterable[int]
) -> pd.DataFrame:
    """
    Corpus WER and WERR per duration bucket.

    Buckets are [0, t1), [t1, t2), ..., [tk, ∞) in frames. Empty buckets are
    left out of the report.

    Args:
        utterances: Per-utterance rows (UTTERANCE_COLUMNS)
        thresholds_frames: Ascending bucket edges

    Returns:
        One row per (tag, method, config, bucket) with count, WER and WERR
    """
    edges = sorted(set(int(t) for t in thresholds_frames))
    bins = [-np.inf] + edges + [np.inf]
    labels = [f"<{edges[0]}"] if edges else ["all"]
    labels += [f"{lo}-{hi}" for lo, hi in zip(edges, edges[1:])]
    if edges:
        labels.append(f">={edges[-1]}")

    frame = utterances.copy()
    frame["errors"] = frame["substitutions"] + frame["deletions"] + frame["insertions"]
    frame["bucket"] = pd.cut(frame["duration_frames"], bins=bins, labels=labels, right=False).astype(str)

    grouped = (
        frame.groupby(["tag", "method", "config", "bucket"], sort=False)
        .agg(utterances=("id", "count"), ref_words=("ref_words", "sum"), errors=("errors", "sum"))
        .reset_index()
    )
    grouped["wer"] = grouped["errors"] / grouped["ref_words"].where(grouped["ref_words"] > 0)

    baselines = grouped[grouped["method"] == BASELINE_METHOD].set_index(["tag", "bucket"])["wer"]
    grouped["werr"] = [
        safe_werr(baselines.get((t, b), float("nan")), w)
        for t, b, w in zip(grouped["tag"], grouped["bucket"], grouped["wer"])
    ]

    for tag in frame["tag"].unique():
        present = set(grouped.loc[grouped["tag"] == tag, "bucket"])
        for label in labels:
            if label not in present:
                logger.warning(f"[{tag}] length bucket {label} is empty")

    order = {label: i for i, label in enumerate(labels)}
    grouped["_order"] = grouped["bucket"].map(order)
    grouped = grouped.sort_values(["tag", "method", "config", "_order"], kind="stable").drop(columns="_order")
    return grouped[["tag", "method", "config", "bucket", "utterances", "ref_words", "errors", "wer", "werr"]]
