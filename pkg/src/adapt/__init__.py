"""Per-utterance episodic test-time adaptation."""

from typing import Dict, Type

from .base import BaseAdapter, NoAdapter
from .config import DEFAULT_LEARNING_RATES, AdaptConfig, AdaptMethod
from .optimizer import AdamW, AdamWHyper, OptState, adamw_step
from .sdpl import SdplAdapter, sdpl_adapt
from .suta import SutaAdapter, suta_adapt
from .trace import AdaptResult, AdaptTrace, TraceRecord

ADAPTERS: Dict[AdaptMethod, Type[BaseAdapter]] = {
    AdaptMethod.NONE: NoAdapter,
    AdaptMethod.SUTA: SutaAdapter,
    AdaptMethod.SDPL: SdplAdapter,
}


def get_adapter(config: AdaptConfig) -> BaseAdapter:
    """Instantiate the adapter for config.method."""
    return ADAPTERS[AdaptMethod(config.method)](config)


__all__ = [
    "ADAPTERS",
    "DEFAULT_LEARNING_RATES",
    "AdamW",
    "AdamWHyper",
    "AdaptConfig",
    "AdaptMethod",
    "AdaptResult",
    "AdaptTrace",
    "BaseAdapter",
    "NoAdapter",
    "OptState",
    "SdplAdapter",
    "SutaAdapter",
    "TraceRecord",
    "adamw_step",
    "get_adapter",
    "sdpl_adapt",
    "suta_adapt",
]
