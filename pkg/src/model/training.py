"""Source-domain CTC training of the toy model."""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..adapt.optimizer import AdamW, AdamWHyper
from ..corpus.generator import Utterance
from ..eval.decoding import greedy_ctc_decode
from ..eval.metrics import corpus_wer, wer
from ..eval.transcript import encode_transcript
from ..gradcore import backward
from ..gradcore import functional as F
from ..losses.ctc import ctc_loss
from ..utils.errors import ContractViolation, DataError
from ..utils.logger import get_logger
from .config import ParamSelection
from .network import ModelState, forward, partition_params, predict_logits, snapshot

logger = get_logger(__name__)


class TrainingLog(BaseModel):
    """Per-epoch mean CTC loss and (optionally) held-out WER."""

    epoch_losses: List[float] = Field(default_factory=list)
    heldout_wer: List[Optional[float]] = Field(default_factory=list)

    @property
    def monotone_fraction(self) -> float:
        """Share of epoch transitions where the mean loss did not increase."""
        steps = list(zip(self.epoch_losses, self.epoch_losses[1:]))
        if not steps:
            return 1.0
        return sum(1 for a, b in steps if b <= a) / len(steps)


def evaluate_wer(model: ModelState, corpus: Sequence[Utterance]) -> float:
    """Corpus WER of greedy decoding, no adaptation."""
    reports = [
        wer(u.transcript, greedy_ctc_decode(predict_logits(model, u.features), model.config.blank_index))
        for u in corpus
    ]
    return corpus_wer(reports).wer


def _encode_targets(corpus: Sequence[Utterance]) -> Dict[str, List[int]]:
    return {u.id: encode_transcript(u.transcript, u.id) for u in corpus}


def utterance_ctc_grads(model: ModelState, utterance: Utterance, target: List[int]) -> Tuple[float, Dict[str, np.ndarray]]:
    """CTC loss of one utterance and its gradients for the trainable parameters."""
    fp = forward(model, utterance.features)
    log_probs = F.log_softmax_rows(fp.logits)
    try:
        loss = ctc_loss(log_probs, target, model.config.blank_index)
    except DataError as e:
        raise DataError(str(e), record_id=utterance.id) from e
    return loss.item(), fp.named_grads(backward(fp.graph, loss))


def train_source(
    model: ModelState,
    corpus: Sequence[Utterance],
    epochs: int,
    lr: float,
    batch_size: int = 8,
    weight_decay: float = 0.0,
    seed: Optional[int] = None,
    heldout: Optional[Sequence[Utterance]] = None
) -> Tuple[ModelState, TrainingLog]:
    """
    Minimize mean CTC loss over a clean corpus with AdamW.

    Every parameter is trained. Gradients are averaged over shuffled
    mini-batches; the shuffle stream is seeded, so runs are reproducible.

    Args:
        model: Initial parameters (left untouched)
        corpus: Training utterances
        epochs: Passes over the corpus (0 returns an identical copy)
        lr: AdamW learning rate
        batch_size: Utterances per update
        weight_decay: Decoupled weight decay
        seed: Shuffle seed (default: model.config.seed)
        heldout: Optional held-out corpus evaluated after every epoch

    Returns:
        (trained model, TrainingLog)

    Raises:
        ContractViolation: If the corpus is empty or arguments are out of range
        DataError: If a transcript has out-of-vocabulary symbols (names the utterance)
    """
    if not corpus:
        raise ContractViolation("training corpus is empty")
    if epochs < 0 or batch_size < 1:
        raise ContractViolation(f"invalid epochs={epochs} or batch_size={batch_size}")

    targets = _encode_targets(corpus)
    working = partition_params(snapshot(model), ParamSelection.ALL)
    optimizer = AdamW(AdamWHyper(lr=lr, weight_decay=weight_decay))
    rng = np.random.default_rng(model.config.seed if seed is None else seed)
    log = TrainingLog()

    for epoch in range(epochs):
        order = rng.permutation(len(corpus))
        total = 0.0
        for start in range(0, len(order), batch_size):
            batch = [corpus[i] for i in order[start:start + batch_size]]
            summed: Dict[str, np.ndarray] = {}
            for utterance in batch:
                loss, grads = utterance_ctc_grads(working, utterance, targets[utterance.id])
                total += loss
                for name, grad in grads.items():
                    summed[name] = summed[name] + grad if name in summed else grad
            optimizer.step(working, {name: g / len(batch) for name, g in summed.items()})

        mean_loss = total / len(corpus)
        log.epoch_losses.append(mean_loss)
        heldout_wer = evaluate_wer(working, heldout) if heldout else None
        log.heldout_wer.append(heldout_wer)
        suffix = f", held-out WER {100 * heldout_wer:.2f}%" if heldout_wer is not None else ""
        logger.info(f"Epoch {epoch + 1}/{epochs}: mean CTC loss {mean_loss:.4f}{suffix}")

    trained = snapshot(working)
    trained.trainable = frozenset()
    return trained, log
