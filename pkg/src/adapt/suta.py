"""Single-utterance adaptation with entropy and class-confusion losses."""

from typing import Tuple

from ..corpus.generator import Utterance
from ..eval.transcript import Transcript
from ..losses.suta import combined_loss
from ..model.network import ForwardPass, ModelState
from .base import BaseAdapter, Objective
from .config import AdaptConfig, AdaptMethod
from .trace import AdaptTrace


class SutaAdapter(BaseAdapter):
    """
    Minimize α·L_em + (1 − α)·L_mcc on temperature-smoothed posteriors.

    Utterances whose frames are all blank-dominant still adapt through the
    class-confusion term.
    """

    method = AdaptMethod.SUTA

    def objective(self, model: ModelState, fp: ForwardPass, hypothesis: Transcript) -> Objective:
        parts = combined_loss(
            fp.logits,
            alpha=self.config.alpha,
            temperature=self.config.temperature,
            blank_index=model.config.blank_index,
            norm=self.config.entropy_norm,
        )
        fields = {
            "entropy": parts.entropy,
            "mcc": parts.mcc,
        }
        return parts.loss, fields


def suta_adapt(source: ModelState, utterance: Utterance, config: AdaptConfig) -> Tuple[Transcript, AdaptTrace]:
    """
    Adapt to one utterance with SUTA and return (final hypothesis, trace).

    Raises:
        ContractViolation: If config.method is not suta
    """
    return SutaAdapter(config)(source, utterance)
