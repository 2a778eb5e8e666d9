"""The toy CTC acoustic model: parameters, forward pass, partitions, snapshots."""

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional

import numpy as np

from ..gradcore import Graph, Tensor, conv_output_length
from ..gradcore import functional as F
from ..utils.errors import ContractViolation, DataError
from ..utils.hashing import array_digest
from .config import ModelConfig, ParamSelection


@dataclass
class ModelState:
    """
    All parameters of the model plus the set currently marked adaptable.

    Parameter arrays are replaced, never written in place, so shallow copies
    made by `partition_params` cannot leak updates into a snapshot.
    """

    config: ModelConfig
    params: Dict[str, np.ndarray]
    trainable: FrozenSet[str] = field(default_factory=frozenset)

    @property
    def names(self) -> List[str]:
        return list(self.params)

    @property
    def frozen(self) -> FrozenSet[str]:
        return frozenset(self.params) - self.trainable

    def num_parameters(self, names: Optional[Iterable[str]] = None) -> int:
        selected = self.params if names is None else names
        return int(sum(self.params[n].size for n in selected))


@dataclass
class ForwardPass:
    """A forward graph: logits plus the parameter leaves it was built from."""

    graph: Graph
    logits: Tensor
    leaves: Dict[str, Tensor]

    def named_grads(self, grad_map: Dict[int, np.ndarray]) -> Dict[str, np.ndarray]:
        """Translate a backward() result into parameter-name keys."""
        return {name: grad_map[t.id] for name, t in self.leaves.items() if t.id in grad_map}


def parameter_shapes(config: ModelConfig) -> Dict[str, tuple]:
    """Name and shape of every parameter `config` implies, in initialization order."""
    shapes: Dict[str, tuple] = {}
    d_in = config.feature_dim
    for i in range(config.conv_layers):
        shapes[f"feat.conv{i}.weight"] = (config.kernel_width * d_in, config.channels)
        shapes[f"feat.conv{i}.bias"] = (1, config.channels)
        d_in = config.channels
    d = config.channels
    for k in range(config.encoder_blocks):
        shapes[f"enc.{k}.ln.gamma"] = (1, d)
        shapes[f"enc.{k}.ln.beta"] = (1, d)
        shapes[f"enc.{k}.fc1.weight"] = (d, config.hidden_dim)
        shapes[f"enc.{k}.fc1.bias"] = (1, config.hidden_dim)
        shapes[f"enc.{k}.fc2.weight"] = (config.hidden_dim, d)
        shapes[f"enc.{k}.fc2.bias"] = (1, d)
    shapes["enc.out.ln.gamma"] = (1, d)
    shapes["enc.out.ln.beta"] = (1, d)
    shapes["head.weight"] = (d, config.vocab_size)
    shapes["head.bias"] = (1, config.vocab_size)
    return shapes


def init_model(config: ModelConfig) -> ModelState:
    """
    Seeded initialization.

    Weights are uniform in ±sqrt(3 / fan_in), biases zero, layer-norm gamma
    one and beta zero. Nothing is trainable until `partition_params`.
    """
    rng = np.random.default_rng(config.seed)
    params: Dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gamma"):
            params[name] = np.ones(shape)
        elif name.endswith(".beta") or name.endswith(".bias"):
            params[name] = np.zeros(shape)
        else:
            bound = np.sqrt(3.0 / shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return ModelState(config=config, params=params)


def output_length(config: ModelConfig, t_in: int) -> int:
    """Output frames L for T_in input frames (conv layers applied in turn)."""
    length = t_in
    for _ in range(config.conv_layers):
        length = conv_output_length(length, config.kernel_width, config.conv_stride, config.padding)
    return length


def forward(model: ModelState, features: np.ndarray) -> ForwardPass:
    """
    Build the forward graph for one utterance.

    Args:
        model: Parameters; names in `model.trainable` become gradient leaves
        features: T_in×D_in feature matrix

    Returns:
        ForwardPass with L×C logits

    Raises:
        ContractViolation: If the feature dimension does not match the config
        DataError: If the input is too short to produce any output frame
    """
    config = model.config
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != config.feature_dim:
        raise ContractViolation(
            f"features must be T_in x {config.feature_dim}, got {features.shape}"
        )
    if features.shape[0] < 1 or output_length(config, features.shape[0]) < 1:
        raise DataError(f"{features.shape[0]} input frames produce no output frames")

    graph = Graph()
    leaves = {
        name: graph.leaf(values, requires_grad=name in model.trainable, name=name)
        for name, values in model.params.items()
    }
    h = graph.leaf(features, name="features")

    for i in range(config.conv_layers):
        h = F.conv1d(
            h, leaves[f"feat.conv{i}.weight"], config.kernel_width, config.conv_stride, config.padding
        )
        h = F.gelu(F.add(h, leaves[f"feat.conv{i}.bias"]))

    for k in range(config.encoder_blocks):
        z = F.layer_norm(h, leaves[f"enc.{k}.ln.gamma"], leaves[f"enc.{k}.ln.beta"], config.ln_eps)
        z = F.gelu(F.add(F.matmul(z, leaves[f"enc.{k}.fc1.weight"]), leaves[f"enc.{k}.fc1.bias"]))
        z = F.add(F.matmul(z, leaves[f"enc.{k}.fc2.weight"]), leaves[f"enc.{k}.fc2.bias"])
        h = F.add(h, z)

    h = F.layer_norm(h, leaves["enc.out.ln.gamma"], leaves["enc.out.ln.beta"], config.ln_eps)
    logits = F.add(F.matmul(h, leaves["head.weight"]), leaves["head.bias"])
    graph.mark_output(logits)
    return ForwardPass(graph=graph, logits=logits, leaves=leaves)


def predict_logits(model: ModelState, features: np.ndarray) -> np.ndarray:
    """Logits as a plain array (no gradients tracked)."""
    return forward(replace(model, trainable=frozenset()), features).logits.values


def partition_params(model: ModelState, selection: ParamSelection) -> ModelState:
    """
    Mark exactly the selected groups trainable and freeze the rest.

    LN: every enc.*.ln.* affine. Feat: every feat.* parameter. LN+Feat: both.
    All: every parameter, including the classifier head.
    """
    selection = ParamSelection(selection)
    return replace(model, params=dict(model.params), trainable=selection.select(model.params))


def snapshot(model: ModelState) -> ModelState:
    """Deep copy of parameters, config and trainable set."""
    return ModelState(
        config=model.config,
        params={name: values.copy() for name, values in model.params.items()},
        trainable=model.trainable,
    )


def restore(model: ModelState, saved: ModelState) -> None:
    """
    Make `model` bit-identical to `saved`, in place.

    Raises:
        ContractViolation: If parameter names or shapes differ
    """
    if list(model.params) != list(saved.params):
        raise ContractViolation("snapshot parameter names do not match the model")
    for name, values in saved.params.items():
        if model.params[name].shape != values.shape:
            raise ContractViolation(
                f"shape mismatch for {name}: model {model.params[name].shape}, snapshot {values.shape}"
            )
    model.params = {name: values.copy() for name, values in saved.params.items()}
    model.trainable = saved.trainable
    model.config = saved.config


def parameter_digest(model: ModelState, names: Optional[Iterable[str]] = None) -> str:
    """SHA-256 over the named parameters (all by default)."""
    return array_digest(model.params, names)
