"""AdamW with decoupled weight decay."""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..utils.errors import ContractViolation


class AdamWHyper(BaseModel):
    """Optimizer hyperparameters."""

    model_config = ConfigDict(frozen=True)

    lr: float = Field(1e-3, ge=0)
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)
    weight_decay: float = Field(1e-4, ge=0)


@dataclass
class OptState:
    """Per-parameter first/second moments and the number of updates applied."""

    step: int = 0
    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: OptState,
    hyper: AdamWHyper
) -> Tuple[Dict[str, np.ndarray], OptState]:
    """
    One bias-corrected Adam update with decoupled weight decay.

    For each parameter p with gradient g at step t:
        p ← p·(1 − lr·λ)
        m ← β1·m + (1 − β1)·g,   v ← β2·v + (1 − β2)·g²
        p ← p − lr · (m / (1 − β1ᵗ)) / (sqrt(v / (1 − β2ᵗ)) + ε)

    Args:
        params: The adaptable parameters only
        grads: Gradient for every entry of params
        state: Moments; updated and returned
        hyper: Learning rate, betas, epsilon, weight decay

    Returns:
        (new parameter arrays, state)

    Raises:
        ContractViolation: If a gradient is missing or has the wrong shape
    """
    for name, values in params.items():
        grad = grads.get(name)
        if grad is None or grad.shape != values.shape:
            got = None if grad is None else grad.shape
            raise ContractViolation(f"gradient for {name} has shape {got}, expected {values.shape}")

    beta1, beta2 = hyper.betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step

    updated: Dict[str, np.ndarray] = {}
    for name, values in params.items():
        grad = grads[name]
        m = state.first.get(name)
        v = state.second.get(name)
        m = (1.0 - beta1) * grad if m is None else beta1 * m + (1.0 - beta1) * grad
        v = (1.0 - beta2) * grad * grad if v is None else beta2 * v + (1.0 - beta2) * grad * grad
        state.first[name] = m
        state.second[name] = v

        decayed = values * (1.0 - hyper.lr * hyper.weight_decay)
        updated[name] = decayed - hyper.lr * (m / correction1) / (np.sqrt(v / correction2) + hyper.eps)
    return updated, state


class AdamW:
    """Stateful wrapper that applies `adamw_step` to a model's trainable parameters."""

    def __init__(self, hyper: AdamWHyper):
        self.hyper = hyper
        self.state = OptState()

    def step(self, model, grads: Mapping[str, np.ndarray]) -> None:
        """
        Update `model.params` for the names in `model.trainable`.

        Arrays are replaced, never modified in place.
        """
        selected = {name: model.params[name] for name in sorted(model.trainable)}
        updated, self.state = adamw_step(selected, grads, self.state, self.hyper)
        params = dict(model.params)
        params.update(updated)
        model.params = params
