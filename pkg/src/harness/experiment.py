"""Experiment configuration: corpora, training, adaptation and sweep axes."""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..adapt.config import AdaptConfig, AdaptMethod
from ..corpus.generator import CorpusSpec
from ..model.config import ModelConfig, ParamSelection
from ..utils.config import config as env_config
from ..utils.config import load_config
from ..utils.errors import ContractViolation, DataError
from ..utils.logger import get_logger

logger = get_logger(__name__)

CALIBRATION_FILE = "calibration.json"
# CLI overrides that set the experiment field even though AdaptConfig has one too
TOP_LEVEL_FIELDS = frozenset({"seed"})


class ShiftSpec(BaseModel):
    """One covariate shift: optional channel distortion, then Gaussian noise."""

    model_config = ConfigDict(frozen=True)

    noise_delta: float = Field(0.0, ge=0)
    gain_sigma: float = Field(0.0, ge=0)
    offset_sigma: float = Field(0.0, ge=0)


class CorpusSizes(BaseModel):
    train: int = Field(200, ge=1)
    heldout: int = Field(50, ge=1)
    test: int = Field(50, ge=1)
    dev: int = Field(50, ge=1)


class TrainingConfig(BaseModel):
    epochs: int = Field(30, ge=0)
    lr: float = Field(3e-3, gt=0)
    batch_size: int = Field(8, ge=1)
    weight_decay: float = Field(0.0, ge=0)


class SweepAxes(BaseModel):
    """Cross-product axes of a sweep; every axis must be nonempty."""

    method: List[AdaptMethod] = Field(default_factory=lambda: [AdaptMethod.SUTA])
    alpha: List[float] = Field(default_factory=lambda: [0.3])
    temperature: List[float] = Field(default_factory=lambda: [2.5])
    iterations: List[int] = Field(default_factory=lambda: [10])
    params: List[ParamSelection] = Field(default_factory=lambda: [ParamSelection.LN_FEAT])

    @model_validator(mode="after")
    def _nonempty(self) -> "SweepAxes":
        for name in ("method", "alpha", "temperature", "iterations", "params"):
            if not getattr(self, name):
                raise ValueError(f"sweep axis '{name}' is empty")
        return self


class CalibrationConfig(BaseModel):
    """Noise grid and target relative WER increases for the low/high shift levels."""

    grid: List[float] = Field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0])
    low_target: Tuple[float, float] = (0.3, 0.8)
    high_target: Tuple[float, float] = (1.0, 2.5)
    refine_steps: int = Field(8, ge=0)
    use_calibration: bool = True


class ExperimentConfig(BaseModel):
    """
    Everything a harness command needs.

    Unset adaptation fields take the AdaptConfig defaults (α = 0.3, T = 2.5,
    N = 10, LN+Feat). `adapt` holds overrides only, so each method resolves
    its own parameter selection.
    """

    seed: int = 0
    output_dir: Path = Field(default_factory=lambda: env_config.output_dir)
    checkpoint: Optional[Path] = None
    jobs: int = Field(default_factory=lambda: env_config.jobs, ge=1)

    model: ModelConfig = Field(default_factory=ModelConfig)
    corpus: Dict[str, Any] = Field(default_factory=dict)
    sizes: CorpusSizes = Field(default_factory=CorpusSizes)
    shifts: Dict[str, ShiftSpec] = Field(
        default_factory=lambda: {"low": ShiftSpec(noise_delta=0.6), "high": ShiftSpec(noise_delta=1.0)}
    )
    training: TrainingConfig = Field(default_factory=TrainingConfig)

    adapt: Dict[str, Any] = Field(default_factory=dict)
    methods: List[AdaptMethod] = Field(
        default_factory=lambda: [AdaptMethod.NONE, AdaptMethod.SDPL, AdaptMethod.SUTA]
    )
    test_tags: List[str] = Field(default_factory=lambda: ["clean", "low", "high"])
    sweep: SweepAxes = Field(default_factory=SweepAxes)
    sweep_tags: List[str] = Field(default_factory=lambda: ["high"])

    curves: bool = True
    save_traces: bool = False
    length_thresholds_seconds: List[float] = Field(default_factory=lambda: [2.0])
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)

    @field_validator("shifts")
    @classmethod
    def _reserved_tags(cls, shifts: Dict[str, ShiftSpec]) -> Dict[str, ShiftSpec]:
        if "clean" in shifts:
            raise ValueError("'clean' is reserved for the unshifted corpus")
        return shifts

    @model_validator(mode="after")
    def _check_adapt(self) -> "ExperimentConfig":
        # Fails early on unknown or out-of-range adaptation fields
        self.adapt_config(AdaptMethod.SUTA)
        return self

    @classmethod
    def build(cls, **fields) -> "ExperimentConfig":
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ContractViolation(f"Invalid experiment config: {e}") from e

    @classmethod
    def from_file(cls, path: Optional[Path] = None, **overrides) -> "ExperimentConfig":
        """
        Load a JSON experiment file and apply CLI overrides on top.

        Overrides named after AdaptConfig fields go into `adapt`; the rest
        replace top-level fields. None values are ignored. A calibration
        file in the output directory replaces the low/high noise levels.

        Args:
            path: Experiment JSON (default: SUTA_EXPERIMENT_CONFIG)
            **overrides: Field overrides

        Returns:
            Validated ExperimentConfig

        Raises:
            ContractViolation: If a field is invalid
            FormatError: If the file is not valid JSON
        """
        data = load_config(path)
        adapt = dict(data.get("adapt", {}))
        for key, value in overrides.items():
            if value is None:
                continue
            if key in AdaptConfig.model_fields and key not in TOP_LEVEL_FIELDS:
                adapt[key] = value
            else:
                data[key] = value
        data["adapt"] = adapt

        experiment = cls.build(**data)
        return experiment.with_calibration()

    def with_calibration(self) -> "ExperimentConfig":
        """Apply `calibration.json` from the output directory, if present and enabled."""
        path = self.output_dir / CALIBRATION_FILE
        if not self.calibration.use_calibration or not path.exists():
            return self
        try:
            levels = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"Invalid calibration file {path}: {e}") from e
        shifts = dict(self.shifts)
        for level in ("low", "high"):
            if levels.get(level) is not None and level in shifts:
                shifts[level] = shifts[level].model_copy(update={"noise_delta": float(levels[level])})
                logger.info(f"Using calibrated {level} noise level {levels[level]:g}")
        return self.model_copy(update={"shifts": shifts})

    @property
    def checkpoint_path(self) -> Path:
        return self.checkpoint if self.checkpoint is not None else self.output_dir / "source.ckpt"

    @property
    def corpus_dir(self) -> Path:
        return self.output_dir / "corpora"

    def corpus_path(self, split: str, tag: str = "clean") -> Path:
        """Path of a corpus file: train, heldout, test_<tag> or dev_<tag>."""
        if split in ("train", "heldout"):
            return self.corpus_dir / f"{split}.corp"
        return self.corpus_dir / f"{split}_{tag}.corp"

    def corpus_spec(self, split: str) -> CorpusSpec:
        """Generation settings for a split; each split gets its own seed and id prefix."""
        offsets = {"train": 1, "heldout": 2, "test": 3, "dev": 4}
        if split not in offsets:
            raise ContractViolation(f"unknown corpus split '{split}'")
        fields = dict(self.corpus)
        fields.update(
            count=getattr(self.sizes, split),
            feature_dim=self.model.feature_dim,
            seed=self.seed * 100 + offsets[split],
            id_prefix=split,
        )
        return CorpusSpec.build(**fields)

    def shift_seed(self, split: str) -> int:
        return self.seed * 100 + (50 if split == "dev" else 60)

    def adapt_config(self, method: AdaptMethod, **point) -> AdaptConfig:
        """
        AdaptConfig for one method (and optional sweep point).

        A `params` override applies to SUTA only; SDPL keeps its LN selection
        unless `sdpl_allow_any_params` is set.
        """
        fields = {**self.adapt, **point, "method": AdaptMethod(method)}
        if fields["method"] is not AdaptMethod.SUTA and not fields.get("sdpl_allow_any_params"):
            if "params" in fields and "params" not in point:
                fields.pop("params")
        fields.setdefault("seed", self.seed)
        return AdaptConfig.build(**fields)

