"""Adaptation settings."""

from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..losses.suta import EntropyNorm
from ..model.config import ParamSelection
from ..utils.errors import ContractViolation
from .optimizer import AdamWHyper


class AdaptMethod(str, Enum):
    NONE = "none"
    SUTA = "suta"
    SDPL = "sdpl"


# Best learning rate per adaptable-parameter selection at 10 iterations
DEFAULT_LEARNING_RATES: Dict[ParamSelection, float] = {
    ParamSelection.LN: 2e-4,
    ParamSelection.FEAT: 2e-5,
    ParamSelection.LN_FEAT: 2e-5,
    ParamSelection.ALL: 1e-6,
}


class AdaptConfig(BaseModel):
    """
    Per-utterance adaptation settings.

    Unset fields reproduce the reference configuration: α = 0.3, T = 2.5,
    N = 10, LN+Feat (LN for SDPL), per-selection learning rates, AdamW.
    `lr_scale` multiplies the per-selection learning rate; `lr` overrides it.
    Adaptation draws no random numbers; `seed` only labels the results.
    """

    model_config = ConfigDict(frozen=True)

    method: AdaptMethod = AdaptMethod.SUTA
    alpha: float = Field(0.3, ge=0.0, le=1.0)
    temperature: float = Field(2.5, ge=1.0)
    iterations: int = Field(10, ge=0)
    params: Optional[ParamSelection] = None
    lr: Optional[float] = Field(None, ge=0)
    lr_scale: float = Field(1.0, gt=0)
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)
    weight_decay: float = Field(1e-4, ge=0)
    entropy_norm: EntropyNorm = EntropyNorm.RETAINED
    sdpl_allow_any_params: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _resolve_params(self) -> "AdaptConfig":
        if self.params is None:
            default = ParamSelection.LN if self.method is AdaptMethod.SDPL else ParamSelection.LN_FEAT
            object.__setattr__(self, "params", default)
        return self

    @classmethod
    def build(cls, **fields) -> "AdaptConfig":
        """Validate fields (None values mean "use the default")."""
        try:
            return cls(**{k: v for k, v in fields.items() if v is not None})
        except ValidationError as e:
            raise ContractViolation(f"Invalid adaptation config: {e}") from e

    @property
    def learning_rate(self) -> float:
        if self.lr is not None:
            return self.lr
        return DEFAULT_LEARNING_RATES[self.params] * self.lr_scale

    def optimizer_hyper(self) -> AdamWHyper:
        return AdamWHyper(
            lr=self.learning_rate,
            betas=self.betas,
            eps=self.eps,
            weight_decay=self.weight_decay,
        )

    def label(self) -> str:
        """Short, stable description used as a results-table key."""
        if self.method is AdaptMethod.NONE:
            return "none"
        parts = [
            f"params={self.params.value}",
            f"N={self.iterations}",
            f"lr={self.learning_rate:.3g}",
        ]
        if self.method is AdaptMethod.SUTA:
            parts = [f"alpha={self.alpha:g}", f"T={self.temperature:g}"] + parts
        return " ".join(parts)
