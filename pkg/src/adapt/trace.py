"""Per-iteration adaptation records."""

from typing import List, Optional

from pydantic import BaseModel, Field

from ..eval.metrics import WerReport
from ..eval.transcript import Transcript


class TraceRecord(BaseModel):
    """State of the model after `iteration` updates."""

    iteration: int
    loss: Optional[float] = None
    entropy: Optional[float] = None
    mcc: Optional[float] = None
    retained_frames: int = 0
    total_frames: int = 0
    hypothesis: str = ""
    wer: Optional[float] = None
    pseudo_label: Optional[str] = None
    skipped: bool = False


class AdaptTrace(BaseModel):
    """Records 0..N: index 0 is the unadapted model."""

    records: List[TraceRecord] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def wer_curve(self) -> List[Optional[float]]:
        return [r.wer for r in self.records]


class AdaptResult(BaseModel):
    """Outcome of adapting to one utterance."""

    utterance_id: str
    method: str
    hypothesis: Transcript
    trace: AdaptTrace
    report: Optional[WerReport] = None
    cer: Optional[float] = None
    duration_frames: int = 0
    # Digest of every parameter entering adaptation, and of the frozen ones after it
    start_digest: str = ""
    frozen_digest_before: str = ""
    frozen_digest_after: str = ""
    changed_params: int = 0
    # Experiment seed, carried into the per-utterance results
    seed: int = 0

    @property
    def retained_fraction(self) -> float:
        first = self.trace.records[0] if self.trace.records else None
        if first is None or not first.total_frames:
            return 0.0
        return first.retained_frames / first.total_frames
