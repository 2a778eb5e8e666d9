"""Tape-based reverse-mode differentiation over 2-D float64 matrices."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..utils.errors import ContractViolation


class OpKind(str, Enum):
    """Operation kinds a graph node can record."""

    LEAF = "leaf"
    MATMUL = "matmul"
    ADD = "add"
    MULTIPLY = "multiply"
    SCALE = "scale"
    NEGATE = "negate"
    EXP = "exp"
    LOG = "log"
    RELU = "relu"
    GELU = "gelu"
    ROW_MEAN = "row_mean"
    ROW_VARIANCE = "row_variance"
    ROW_LOGSUMEXP = "row_logsumexp"
    SUM = "sum"
    MEAN = "mean"
    TRANSPOSE = "transpose"
    ROW_MASK_SELECT = "row_mask_select"
    CONCAT_ROWS = "concat_rows"
    CONV1D = "conv1d"
    LAYER_NORM = "layer_norm"
    CTC_NLL = "ctc_nll"


@dataclass(eq=False)
class Tensor:
    """
    A node value on a Graph.

    Values are always a 2-D float64 matrix; sequences are time-major
    (one row per frame). `grad` is filled by `backward` for leaves that
    require gradients.
    """

    values: np.ndarray
    requires_grad: bool = False
    name: Optional[str] = None
    graph: Optional["Graph"] = field(default=None, repr=False)
    id: int = -1
    grad: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def item(self) -> float:
        """Value of a 1×1 tensor as a Python float."""
        if self.values.shape != (1, 1):
            raise ContractViolation(f"item() needs a 1x1 tensor, got {self.values.shape}")
        return float(self.values[0, 0])

    def __add__(self, other: "Tensor") -> "Tensor":
        return op_apply(OpKind.ADD, [self, other])

    def __sub__(self, other: "Tensor") -> "Tensor":
        return op_apply(OpKind.ADD, [self, op_apply(OpKind.NEGATE, [other])])

    def __mul__(self, other: "Tensor") -> "Tensor":
        return op_apply(OpKind.MULTIPLY, [self, other])

    def __neg__(self) -> "Tensor":
        return op_apply(OpKind.NEGATE, [self])

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return op_apply(OpKind.MATMUL, [self, other])

    @property
    def T(self) -> "Tensor":
        return op_apply(OpKind.TRANSPOSE, [self])


@dataclass
class Node:
    """One recorded operation: kind, input node ids, attributes and cached activations."""

    id: int
    kind: OpKind
    inputs: tuple
    attrs: Dict[str, Any]
    cache: Dict[str, Any]
    tensor: Tensor


class Graph:
    """
    An append-only tape of operations.

    Nodes are stored in creation order, which is a topological order: a node
    can only reference tensors that already exist on the tape.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.outputs: List[int] = []

    def leaf(
        self,
        values: Any,
        requires_grad: bool = False,
        name: Optional[str] = None
    ) -> Tensor:
        """
        Add an input or parameter tensor.

        Args:
            values: 2-D array-like (copied to float64)
            requires_grad: Whether backward should deliver a gradient for it
            name: Optional label (parameter name)

        Returns:
            The leaf tensor
        """
        array = np.array(values, dtype=np.float64)
        if array.ndim != 2:
            raise ContractViolation(f"Tensors are 2-D, got shape {array.shape}")
        return self._record(OpKind.LEAF, (), {}, {}, array, requires_grad, name)

    def mark_output(self, tensor: Tensor) -> Tensor:
        self.outputs.append(tensor.id)
        return tensor

    def _record(
        self,
        kind: OpKind,
        inputs: tuple,
        attrs: Dict[str, Any],
        cache: Dict[str, Any],
        values: np.ndarray,
        requires_grad: bool,
        name: Optional[str] = None
    ) -> Tensor:
        tensor = Tensor(values=values, requires_grad=requires_grad, name=name, graph=self)
        tensor.id = len(self.nodes)
        self.nodes.append(Node(tensor.id, kind, inputs, attrs, cache, tensor))
        return tensor

    def __len__(self) -> int:
        return len(self.nodes)


def op_apply(kind: OpKind, inputs: Sequence[Tensor], **attrs: Any) -> Tensor:
    """
    Run one operation and record it on the inputs' graph.

    Args:
        kind: Operation kind (anything but LEAF)
        inputs: Input tensors, all on the same graph
        **attrs: Operation attributes (e.g. factor for SCALE, keep for ROW_MASK_SELECT)

    Returns:
        Output tensor

    Raises:
        ContractViolation: On shape mismatches or invalid attributes
    """
    from .ops import get_kernel

    if kind is OpKind.LEAF:
        raise ContractViolation("Leaves are created with Graph.leaf")
    if not inputs:
        raise ContractViolation(f"{kind.value} needs at least one input")

    graph = inputs[0].graph
    if graph is None or any(t.graph is not graph for t in inputs):
        raise ContractViolation(f"{kind.value}: inputs must live on the same graph")

    kernel = get_kernel(kind)
    arrays = [t.values for t in inputs]
    kernel.check(arrays, attrs)
    values, cache = kernel.forward(arrays, attrs)
    requires_grad = any(t.requires_grad for t in inputs)
    return graph._record(kind, tuple(t.id for t in inputs), attrs, cache, values, requires_grad)


def backward(graph: Graph, loss: Tensor) -> Dict[int, np.ndarray]:
    """
    Reverse-mode sweep from a scalar loss.

    Gradients accumulate additively when a tensor feeds several consumers.
    Each call starts from zero; `Tensor.grad` of every gradient-requiring
    leaf is overwritten with the result.

    Args:
        graph: The graph the loss was built on
        loss: A 1×1 tensor

    Returns:
        Mapping leaf tensor id -> gradient array (only leaves with requires_grad)

    Raises:
        ContractViolation: If the loss is not 1×1 or not on this graph
    """
    from .ops import get_kernel

    if loss.graph is not graph:
        raise ContractViolation("Loss tensor does not belong to this graph")
    if loss.shape != (1, 1):
        raise ContractViolation(f"Loss must be 1x1, got {loss.shape}")

    trainable = [n.tensor for n in graph.nodes if n.kind is OpKind.LEAF and n.tensor.requires_grad]
    if not trainable:
        return {}

    pending: Dict[int, np.ndarray] = {loss.id: np.ones((1, 1))}
    result: Dict[int, np.ndarray] = {}

    for node in reversed(graph.nodes[: loss.id + 1]):
        upstream = pending.pop(node.id, None)
        if upstream is None or not node.tensor.requires_grad:
            continue
        if node.kind is OpKind.LEAF:
            result[node.id] = upstream
            continue

        inputs = [graph.nodes[i].tensor for i in node.inputs]
        needs = [t.requires_grad for t in inputs]
        kernel = get_kernel(node.kind)
        input_grads = kernel.backward(
            upstream, [t.values for t in inputs], node.tensor.values, node.cache, node.attrs, needs
        )
        for tensor, grad in zip(inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if tensor.id in pending:
                pending[tensor.id] = pending[tensor.id] + grad
            else:
                pending[tensor.id] = grad

    for tensor in trainable:
        grad = result.get(tensor.id)
        if grad is None:
            grad = np.zeros_like(tensor.values)
            result[tensor.id] = grad
        tensor.grad = grad

    return result
