"""Central finite-difference checks shared by the gradient tests."""

from typing import Callable, List, Sequence

import numpy as np

from src.gradcore import Graph, Tensor, backward

Build = Callable[[List[Tensor]], Tensor]

FD_STEP = 1e-6
RTOL = 1e-4
ATOL = 1e-7


def evaluate(build: Build, arrays: Sequence[np.ndarray]) -> float:
    graph = Graph()
    return build([graph.leaf(a) for a in arrays]).item()


def analytic_grads(build: Build, arrays: Sequence[np.ndarray]) -> List[np.ndarray]:
    graph = Graph()
    leaves = [graph.leaf(a, requires_grad=True) for a in arrays]
    grads = backward(graph, build(leaves))
    return [grads[leaf.id] for leaf in leaves]


def numeric_grad(build: Build, arrays: Sequence[np.ndarray], index: int, step: float = FD_STEP) -> np.ndarray:
    base = [np.array(a, dtype=np.float64) for a in arrays]
    grad = np.zeros_like(base[index])
    for pos in np.ndindex(*grad.shape):
        plus = [a.copy() for a in base]
        minus = [a.copy() for a in base]
        plus[index][pos] += step
        minus[index][pos] -= step
        grad[pos] = (evaluate(build, plus) - evaluate(build, minus)) / (2 * step)
    return grad


def assert_gradients_match(build: Build, arrays: Sequence[np.ndarray], check: Sequence[int] = None) -> None:
    """Analytic gradient of every (or every listed) input against central differences."""
    analytic = analytic_grads(build, arrays)
    for index in (range(len(arrays)) if check is None else check):
        numeric = numeric_grad(build, arrays, index)
        np.testing.assert_allclose(analytic[index], numeric, rtol=RTOL, atol=ATOL)
