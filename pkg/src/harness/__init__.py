"""Experiment harness: corpora, source training, adaptation runs and reports."""

from .commands import (
    cmd_adapt,
    cmd_calibrate,
    cmd_gen_corpus,
    cmd_length_analysis,
    cmd_sweep,
    cmd_train,
    sweep_points,
)
from .experiment import CalibrationConfig, CorpusSizes, ExperimentConfig, ShiftSpec, SweepAxes, TrainingConfig
from .results import ResultsTable, length_buckets
from .runner import check_episodic, run_adaptation

__all__ = [
    "cmd_adapt",
    "cmd_calibrate",
    "cmd_gen_corpus",
    "cmd_length_analysis",
    "cmd_sweep",
    "cmd_train",
    "sweep_points",
    "CalibrationConfig",
    "CorpusSizes",
    "ExperimentConfig",
    "ShiftSpec",
    "SweepAxes",
    "TrainingConfig",
    "ResultsTable",
    "length_buckets",
    "check_episodic",
    "run_adaptation",
]
