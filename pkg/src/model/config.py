"""Model configuration and parameter-group selections."""

import re
from enum import Enum
from typing import FrozenSet, Iterable

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..eval.transcript import BLANK_INDEX, VOCAB_SIZE
from ..utils.errors import ContractViolation

_LN_PATTERN = re.compile(r"^enc\.[^.]+\.ln\.")


class ParamSelection(str, Enum):
    """Which parameters adapt at test time; everything else is frozen."""

    LN = "ln"
    FEAT = "feat"
    LN_FEAT = "ln+feat"
    ALL = "all"

    def select(self, names: Iterable[str]) -> FrozenSet[str]:
        """Names of the adaptable parameters under this selection."""
        names = list(names)
        ln = {n for n in names if _LN_PATTERN.match(n)}
        feat = {n for n in names if n.startswith("feat.")}
        if self is ParamSelection.LN:
            return frozenset(ln)
        if self is ParamSelection.FEAT:
            return frozenset(feat)
        if self is ParamSelection.LN_FEAT:
            return frozenset(ln | feat)
        return frozenset(names)


class ModelConfig(BaseModel):
    """
    Architecture of the toy CTC acoustic model.

    Conv feature extractor (GELU after every layer), pre-norm feed-forward
    encoder blocks with residual connections, a final layer norm and a
    linear CTC classifier.
    """

    model_config = ConfigDict(frozen=True)

    feature_dim: int = Field(16, ge=1)
    conv_layers: int = Field(2, ge=1)
    kernel_width: int = Field(3, ge=1)
    conv_stride: int = Field(1, ge=1)
    channels: int = Field(64, ge=1)
    encoder_blocks: int = Field(2, ge=1)
    hidden_dim: int = Field(64, ge=1)
    vocab_size: int = Field(VOCAB_SIZE, ge=2)
    blank_index: int = BLANK_INDEX
    ln_eps: float = Field(1e-5, gt=0)
    seed: int = 0

    @field_validator("blank_index")
    @classmethod
    def _blank_is_zero(cls, value: int) -> int:
        if value != BLANK_INDEX:
            raise ValueError(f"blank_index is fixed at {BLANK_INDEX}")
        return value

    @property
    def padding(self) -> int:
        return (self.kernel_width - 1) // 2

    @classmethod
    def build(cls, **fields) -> "ModelConfig":
        """Validate fields, raising ContractViolation instead of pydantic's error."""
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ContractViolation(f"Invalid model config: {e}") from e
