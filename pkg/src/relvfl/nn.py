"""Minimal dense network core: MLP forward/backward, Huber loss, SGD, gradient checking.

Weight matrices are (out, in); a batch is (B, in) and layers compute
act(x @ W.T + b). Updates are functional: `sgd_step` returns a new model and
parameter arrays are never mutated in place, so stale references (checkpoints,
absent clients) stay bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = ("relu", "identity")

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str


@dataclass(frozen=True)
class MlpModel:
    layers: tuple[Layer, ...]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    @property
    def n_params(self) -> int:
        return sum(l.weights.size + l.biases.size for l in self.layers)


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer caches from one forward pass: inputs[t] feeds layer t."""

    inputs: tuple[np.ndarray, ...]
    pre_activations: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class GradientBundle:
    weight_grads: tuple[np.ndarray, ...]
    bias_grads: tuple[np.ndarray, ...]
    input_gradient: np.ndarray  # (B, input_dim)


def init_model(sizes: Sequence[int], seed: int, hidden_activation: str = "relu") -> MlpModel:
    """Build an MLP with the given layer sizes, e.g. [3, 4, 2] -> two layers.

    Weights are uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero. Hidden
    layers use ``hidden_activation``; the output layer is always identity.
    """
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise ValueError(f"need at least input and output sizes, got {sizes}")
    for s in sizes:
        if s < 1:
            raise ValueError(f"all layer sizes must be >= 1, got {sizes}")
    if hidden_activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {hidden_activation!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for t in range(len(sizes) - 1):
        fan_in, fan_out = sizes[t], sizes[t + 1]
        bound = 1.0 / np.sqrt(fan_in)
        weights = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        act = hidden_activation if t < len(sizes) - 2 else "identity"
        layers.append(Layer(weights=weights, biases=np.zeros(fan_out), activation=act))
    return MlpModel(layers=tuple(layers))


def forward(model: MlpModel, batch: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ValueError(
            f"batch shape {batch.shape} incompatible with input_dim {model.input_dim}"
        )
    inputs = []
    pre_acts = []
    x = batch
    for layer in model.layers:
        inputs.append(x)
        z = x @ layer.weights.T + layer.biases
        pre_acts.append(z)
        x = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return x, ForwardTrace(inputs=tuple(inputs), pre_activations=tuple(pre_acts))


def backward(model: MlpModel, trace: ForwardTrace, output_gradient: np.ndarray) -> GradientBundle:
    """Backpropagate d(loss)/d(output) to parameter grads and d(loss)/d(input)."""
    if len(trace.inputs) != len(model.layers):
        raise ValueError("trace does not match the model's layer count")
    grad = np.asarray(output_gradient, dtype=np.float64)
    batch_size = trace.inputs[0].shape[0]
    if grad.shape != (batch_size, model.output_dim):
        raise ValueError(
            f"output_gradient shape {grad.shape}, expected "
            f"({batch_size}, {model.output_dim})"
        )
    weight_grads: list[np.ndarray] = []
    bias_grads: list[np.ndarray] = []
    for t in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[t]
        z = trace.pre_activations[t]
        if z.shape != (batch_size, layer.weights.shape[0]):
            raise ValueError(f"trace layer {t} shape mismatch; stale trace?")
        dz = grad * (z > 0) if layer.activation == "relu" else grad
        weight_grads.append(dz.T @ trace.inputs[t])
        bias_grads.append(dz.sum(axis=0))
        grad = dz @ layer.weights
    weight_grads.reverse()
    bias_grads.reverse()
    return GradientBundle(
        weight_grads=tuple(weight_grads),
        bias_grads=tuple(bias_grads),
        input_gradient=grad,
    )


def sgd_step(model: MlpModel, grads: GradientBundle, lr: float) -> MlpModel:
    """Return the model moved one plain gradient step: theta <- theta - lr * g."""
    if lr < 0:
        raise ValueError(f"lr must be >= 0, got {lr}")
    layers = []
    for layer, dw, db in zip(model.layers, grads.weight_grads, grads.bias_grads):
        if dw.shape != layer.weights.shape or db.shape != layer.biases.shape:
            raise ValueError("gradient shapes do not mirror parameter shapes")
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise FloatingPointError("non-finite gradient, aborting update")
        layers.append(
            Layer(
                weights=layer.weights - lr * dw,
                biases=layer.biases - lr * db,
                activation=layer.activation,
            )
        )
    return MlpModel(layers=tuple(layers))


def huber(pred: np.ndarray, target: np.ndarray, delta: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean Huber loss over the batch and its gradient w.r.t. ``pred``.

    Per element, with r = pred - target: 0.5*r^2 if |r| <= delta, otherwise
    delta*(|r| - delta/2). The mean reduction makes the gradient carry a 1/B.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"pred shape {pred.shape} != target shape {target.shape}")
    r = pred - target
    abs_r = np.abs(r)
    quadratic = abs_r <= delta
    losses = np.where(quadratic, 0.5 * r * r, delta * (abs_r - 0.5 * delta))
    grad = np.clip(r, -delta, delta) / r.size
    return float(losses.mean()), grad


def flatten_params(model: MlpModel) -> np.ndarray:
    parts = []
    for layer in model.layers:
        parts.append(layer.weights.ravel())
        parts.append(layer.biases)
    return np.concatenate(parts)


def unflatten_params(model: MlpModel, flat: np.ndarray) -> MlpModel:
    layers = []
    pos = 0
    for layer in model.layers:
        w_size = layer.weights.size
        weights = flat[pos : pos + w_size].reshape(layer.weights.shape)
        pos += w_size
        b_size = layer.biases.size
        biases = flat[pos : pos + b_size].copy()
        pos += b_size
        layers.append(Layer(weights=weights, biases=biases, activation=layer.activation))
    if pos != flat.size:
        raise ValueError(f"flat vector length {flat.size}, model needs {pos}")
    return MlpModel(layers=tuple(layers))


def grad_check(
    model: MlpModel,
    batch: np.ndarray,
    targets: np.ndarray,
    delta: float = 1.0,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Loss is huber(forward(model, batch).ravel(), targets.ravel()), so models
    with any output width can be checked. Parameters where the sum
    |analytic| + |numeric| <= 1e-8 are skipped. Intended for models with at
    most ~1e4 parameters.
    """
    if model.n_params > 10_000:
        raise ValueError(f"model too large to perturb every parameter ({model.n_params})")
    targets = np.asarray(targets, dtype=np.float64)
    out, trace = forward(model, batch)
    _, dpred = huber(out.ravel(), targets.ravel(), delta)
    grads = backward(model, trace, dpred.reshape(out.shape))
    analytic = flatten_params(
        MlpModel(
            layers=tuple(
                Layer(weights=w, biases=b, activation=l.activation)
                for l, w, b in zip(model.layers, grads.weight_grads, grads.bias_grads)
            )
        )
    )
    theta = flatten_params(model)
    numeric = np.zeros_like(theta)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] = theta[i] + step
        out_plus, _ = forward(unflatten_params(model, bumped), batch)
        loss_plus, _ = huber(out_plus.ravel(), targets.ravel(), delta)
        bumped[i] = theta[i] - step
        out_minus, _ = forward(unflatten_params(model, bumped), batch)
        loss_minus, _ = huber(out_minus.ravel(), targets.ravel(), delta)
        numeric[i] = (loss_plus - loss_minus) / (2.0 * step)
    scale = np.abs(analytic) + np.abs(numeric)
    mask = scale > 1e-8
    if not mask.any():
        return 0.0
    return float((np.abs(analytic - numeric)[mask] / scale[mask]).max())


def model_to_dict(model: MlpModel) -> dict:
    """Serializable layout: per layer, activation, weight rows (row-major), biases."""
    return {
        "layers": [
            {
                "activation": layer.activation,
                "weights": [list(map(float, row)) for row in layer.weights],
                "biases": [float(b) for b in layer.biases],
            }
            for layer in model.layers
        ]
    }


def model_from_dict(payload: dict) -> MlpModel:
    layers = []
    for entry in payload["layers"]:
        if entry["activation"] not in ACTIVATIONS:
            raise ValueError(f"unknown activation {entry['activation']!r}")
        layers.append(
            Layer(
                weights=np.asarray(entry["weights"], dtype=np.float64),
                biases=np.asarray(entry["biases"], dtype=np.float64),
                activation=entry["activation"],
            )
        )
    return MlpModel(layers=tuple(layers))


def save_model(model: MlpModel, path: str) -> None:
    """Write the versioned JSON dump; floats survive the round trip exactly."""
    payload = {"format_version": CHECKPOINT_FORMAT_VERSION, **model_to_dict(model)}
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model(path: str) -> MlpModel:
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(
            f"unsupported model format version {version!r}, "
            f"expected {CHECKPOINT_FORMAT_VERSION}"
        )
    return model_from_dict(payload)
