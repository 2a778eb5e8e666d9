"""Parallel episodic adaptation over a corpus."""

from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

from ..adapt import AdaptConfig, AdaptResult, BaseAdapter, get_adapter
from ..corpus.generator import Utterance
from ..model.network import ModelState, parameter_digest
from ..utils.errors import SutaError
from ..utils.logger import get_logger

logger = get_logger(__name__)

# Per-process copies installed by the pool initializer
_worker_source: Optional[ModelState] = None
_worker_adapter: Optional[BaseAdapter] = None


def _init_worker(source: ModelState, config: AdaptConfig) -> None:
    global _worker_source, _worker_adapter
    _worker_source = source
    _worker_adapter = get_adapter(config)


def _adapt_one(utterance: Utterance) -> AdaptResult:
    return _worker_adapter.adapt(_worker_source, utterance)


def check_episodic(source: ModelState, results: Sequence[AdaptResult]) -> None:
    """
    Verify every job started from `source` and left its frozen parameters alone.

    Raises:
        SutaError: On any digest mismatch
    """
    expected = parameter_digest(source)
    for result in results:
        if result.start_digest != expected:
            raise SutaError(f"utterance {result.utterance_id} did not start from the source snapshot")
        if result.frozen_digest_after != result.frozen_digest_before:
            raise SutaError(f"utterance {result.utterance_id} modified frozen parameters")


def run_adaptation(
    source: ModelState,
    corpus: Sequence[Utterance],
    config: AdaptConfig,
    jobs: int = 1
) -> List[AdaptResult]:
    """
    Adapt to every utterance independently, from the same source snapshot.

    With jobs > 1 utterances are spread over a process pool; results are
    merged by utterance id and returned in corpus order, so the output does
    not depend on completion order or job count.

    Args:
        source: Source snapshot (read-only)
        corpus: Utterances to adapt on
        config: Adaptation settings
        jobs: Worker processes

    Returns:
        One AdaptResult per utterance, in corpus order

    Raises:
        SutaError: If an episodic-reset or freeze check fails
        ContractViolation, DataError: Propagated from adaptation
    """
    ids = [u.id for u in corpus]
    if len(set(ids)) != len(ids):
        raise SutaError("utterance ids must be unique within a corpus")

    adapter = get_adapter(config)
    if jobs <= 1 or len(corpus) <= 1:
        finished = [adapter.adapt(source, u) for u in corpus]
    else:
        chunk = max(1, len(corpus) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(source, config)) as pool:
            finished = list(pool.map(_adapt_one, corpus, chunksize=chunk))

    by_id: Dict[str, AdaptResult] = {r.utterance_id: r for r in finished}
    results = [by_id[i] for i in ids]
    check_episodic(source, results)
    logger.debug(f"Adapted {len(results)} utterances with {config.method.value} ({jobs} job(s))")
    return results
