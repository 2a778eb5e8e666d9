"""Base adapter: the episodic per-utterance loop shared by every method."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

from ..corpus.generator import Utterance
from ..eval.decoding import best_path, greedy_ctc_decode
from ..eval.metrics import cer, wer
from ..eval.transcript import Transcript
from ..gradcore import Tensor, backward
from ..model.config import ParamSelection
from ..model.network import ForwardPass, ModelState, forward, parameter_digest, partition_params, snapshot
from ..utils.errors import ContractViolation
from ..utils.logger import get_logger
from .config import AdaptConfig, AdaptMethod
from .optimizer import AdamW
from .trace import AdaptResult, AdaptTrace, TraceRecord

logger = get_logger(__name__)

# Objective output: differentiable loss (None skips the update) and extra trace fields
Objective = Tuple[Optional[Tensor], Dict[str, Any]]


class BaseAdapter(ABC):
    """
    Base class for test-time adapters.

    Subclasses supply the per-iteration objective; the loop, optimizer,
    decoding and bookkeeping live here. Every call to `adapt` works on a
    private copy of the source snapshot with a fresh optimizer, so
    utterances never see each other's updates.
    """

    method: AdaptMethod

    def __init__(self, config: AdaptConfig):
        """
        Initialize adapter.

        Args:
            config: Adaptation settings

        Raises:
            ContractViolation: If the config names another method
        """
        if config.method is not self.method:
            raise ContractViolation(
                f"{type(self).__name__} needs method={self.method.value}, got {config.method.value}"
            )
        self.config = config
        self.logger = get_logger(f"{__name__}.{self.method.value}")

    @property
    def selection(self) -> ParamSelection:
        return self.config.params

    @property
    def iterations(self) -> int:
        return self.config.iterations

    def working_copy(self, source: ModelState) -> ModelState:
        """Private copy of the source with the selected groups trainable."""
        return partition_params(snapshot(source), self.selection)

    @abstractmethod
    def objective(self, model: ModelState, fp: ForwardPass, hypothesis: Transcript) -> Objective:
        """
        Compute the adaptation loss for one forward pass.

        Args:
            model: Working copy being adapted
            fp: Forward graph of `model`
            hypothesis: Greedy decode of `fp.logits`

        Returns:
            (loss or None to skip the update, extra TraceRecord fields); frame counts
            are filled in by the loop
        """
        pass

    def adapt(
        self,
        source: ModelState,
        utterance: Utterance,
        reference: Optional[Transcript] = None
    ) -> AdaptResult:
        """
        Adapt a private copy of `source` to one utterance and decode it.

        Record t of the trace describes the model after t updates; the final
        hypothesis is decoded from record N's logits with a plain argmax.

        Args:
            source: Source snapshot (never modified)
            utterance: Utterance to adapt on
            reference: Transcript scored per iteration (default: the utterance's own)

        Returns:
            AdaptResult with hypothesis, trace and parameter digests

        Raises:
            ContractViolation: On shape or option errors from the model and losses
            DataError: If the model output has no frames
        """
        reference = utterance.transcript if reference is None else reference
        start_digest = parameter_digest(source)
        working = self.working_copy(source)
        frozen = sorted(working.frozen)
        frozen_before = parameter_digest(working, frozen)
        optimizer = AdamW(self.config.optimizer_hyper())
        blank = working.config.blank_index

        trace = AdaptTrace()
        hypothesis = Transcript()
        for t in range(self.iterations + 1):
            fp = forward(working, utterance.features)
            hypothesis = greedy_ctc_decode(fp.logits, blank)
            path = best_path(fp.logits)
            loss, fields = self.objective(working, fp, hypothesis)
            record = TraceRecord(
                iteration=t,
                retained_frames=int((path != blank).sum()),
                total_frames=len(path),
                loss=None if loss is None else loss.item(),
                hypothesis=hypothesis.text,
                wer=wer(reference, hypothesis).wer if len(reference) else None,
                **fields,
            )
            trace.records.append(record)
            if t == self.iterations:
                break
            if loss is None:
                self.logger.debug(f"{utterance.id} t={t}: update skipped")
                continue
            self.logger.debug(f"{utterance.id} t={t}: loss={record.loss:.6f}")
            optimizer.step(working, fp.named_grads(backward(fp.graph, loss)))

        changed = sum(
            1 for name in working.trainable
            if not (working.params[name] == source.params[name]).all()
        )
        return AdaptResult(
            utterance_id=utterance.id,
            method=self.method.value,
            hypothesis=hypothesis,
            trace=trace,
            report=wer(reference, hypothesis) if len(reference) else None,
            cer=cer(reference, hypothesis) if len(reference) else None,
            duration_frames=utterance.duration_frames,
            start_digest=start_digest,
            frozen_digest_before=frozen_before,
            frozen_digest_after=parameter_digest(working, frozen),
            changed_params=changed,
            seed=self.config.seed,
        )

    def __call__(self, source: ModelState, utterance: Utterance) -> Tuple[Transcript, AdaptTrace]:
        result = self.adapt(source, utterance)
        return result.hypothesis, result.trace


class NoAdapter(BaseAdapter):
    """Unadapted greedy decoding: one trace record, no updates."""

    method = AdaptMethod.NONE

    @property
    def iterations(self) -> int:
        return 0

    def working_copy(self, source: ModelState) -> ModelState:
        working = snapshot(source)
        working.trainable = frozenset()
        return working

    def objective(self, model: ModelState, fp: ForwardPass, hypothesis: Transcript) -> Objective:
        return None, {}
