"""Single-utterance dynamic pseudo labeling."""

from typing import Tuple

from ..corpus.generator import Utterance
from ..eval.decoding import best_path, collapse_path
from ..eval.transcript import Transcript, decode_tokens
from ..gradcore import functional as F
from ..losses.ctc import ctc_loss
from ..model.config import ParamSelection
from ..model.network import ForwardPass, ModelState
from ..utils.errors import ContractViolation
from .base import BaseAdapter, Objective
from .config import AdaptConfig, AdaptMethod
from .trace import AdaptTrace


class SdplAdapter(BaseAdapter):
    """
    Minimize CTC loss against the model's own greedy transcript.

    The pseudo label is re-decoded at every iteration. An all-blank decode
    gives an empty label and that iteration's update is skipped.
    """

    method = AdaptMethod.SDPL

    def __init__(self, config: AdaptConfig):
        super().__init__(config)
        if config.params is not ParamSelection.LN:
            if not config.sdpl_allow_any_params:
                raise ContractViolation(
                    f"SDPL adapts layer-norm parameters only, got params={config.params.value}; "
                    "set sdpl_allow_any_params to override"
                )
            self.logger.warning(f"SDPL running with params={config.params.value} instead of ln")

    def objective(self, model: ModelState, fp: ForwardPass, hypothesis: Transcript) -> Objective:
        blank = model.config.blank_index
        label = collapse_path(best_path(fp.logits), blank)
        fields = {
            "pseudo_label": decode_tokens(label),
            "skipped": not label,
        }
        if not label:
            return None, fields
        return ctc_loss(F.log_softmax_rows(fp.logits), label, blank), fields


def sdpl_adapt(source: ModelState, utterance: Utterance, config: AdaptConfig) -> Tuple[Transcript, AdaptTrace]:
    """
    Adapt to one utterance with dynamic pseudo labels and return (final hypothesis, trace).

    Raises:
        ContractViolation: If config.method is not sdpl, or params is not ln without the override
    """
    return SdplAdapter(config)(source, utterance)
