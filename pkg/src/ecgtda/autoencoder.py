"""Dense symmetric autoencoder in plain numpy.

Architecture 400 -> 200 -> 100 -> 20 -> 100 -> 200 -> 400: six weight
layers, PReLU on the five hidden layers, linear output, trained with MSE
+ Adadelta and an annealed inverted-dropout schedule.  Everything —
forward, backprop, optimizer — is written out explicitly so it can be
checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NumericError

__all__ = [
    "DEFAULT_SIZES",
    "AEModel",
    "TrainConfig",
    "dropout_rate",
    "ae_init",
    "ae_forward",
    "ae_loss_and_gradients",
    "ae_train",
    "ae_channels",
    "save_model",
    "load_model",
]

DEFAULT_SIZES = (400, 200, 100, 20, 100, 200, 400)
PRELU_INIT = 0.25
ADADELTA_RHO = 0.95
ADADELTA_EPS = 1e-6


@dataclass
class AEModel:
    """Parameters + Adadelta state.  Mutated in place by training."""

    sizes: tuple
    weights: list  # (fan_in, fan_out) per layer
    biases: list
    slopes: list  # per-unit PReLU slopes, hidden layers only
    acc_grad: dict = field(default_factory=dict)
    acc_update: dict = field(default_factory=dict)
    epoch: int = 0
    seed: int = 0

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def latent_layer(self):
        return len(self.sizes) // 2 - 1  # activation index of the bottleneck

    def parameters(self):
        """[(name, array), ...] in a fixed order."""
        out = []
        for i, w in enumerate(self.weights):
            out.append((f"W{i}", w))
            out.append((f"b{i}", self.biases[i]))
        for i, a in enumerate(self.slopes):
            out.append((f"a{i}", a))
        return out


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 128
    learning_rate: float = 1.0
    dropout_max: float = 0.5
    dropout_anneal_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidInputError("epochs and batch_size must be >= 1")
        if not 0.0 <= self.dropout_max < 1.0:
            raise InvalidInputError("dropout_max must be in [0, 1)")


def dropout_rate(cfg: TrainConfig, epoch: int) -> float:
    """Linear anneal from dropout_max to exactly 0 at the anneal horizon."""
    return cfg.dropout_max * max(0.0, 1.0 - epoch / cfg.dropout_anneal_epochs)


def ae_init(seed: int = 0, sizes=DEFAULT_SIZES) -> AEModel:
    """He-normal weights, zero biases, PReLU slopes 0.25."""
    if len(sizes) < 3 or sizes[0] != sizes[-1]:
        raise InvalidInputError("sizes must be symmetric with >= 2 layers")
    rng = np.random.default_rng(seed)
    weights, biases, slopes = [], [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    for width in sizes[1:-1]:
        slopes.append(np.full(width, PRELU_INIT))
    return AEModel(tuple(sizes), weights, biases, slopes, seed=seed)


def _prelu(z, slope):
    return np.where(z > 0, z, slope * z)


def ae_forward(model, windows, dropout=0.0, training=False, rng=None):
    """Forward pass.  Returns (latent, reconstruction) for a batch or a
    single window; dropout applies to hidden activations only, with
    inverted scaling, and needs `training=True` plus an rng."""
    x = np.asarray(windows, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.sizes[0]:
        raise InvalidInputError(f"windows must have {model.sizes[0]} samples")
    h = x
    latent = None
    use_dropout = training and dropout > 0.0
    if use_dropout and rng is None:
        raise InvalidInputError("training-mode dropout needs an rng")
    for i in range(model.n_layers):
        z = h @ model.weights[i] + model.biases[i]
        if i < model.n_layers - 1:
            h = _prelu(z, model.slopes[i])
            if use_dropout:
                mask = rng.random(h.shape) >= dropout
                h = h * mask / (1.0 - dropout)
            if i == model.latent_layer:
                latent = h
        else:
            h = z
    if single:
        return latent[0], h[0]
    return latent, h


def ae_loss_and_gradients(model, windows, dropout=0.0, rng=None):
    """MSE loss and gradients for every parameter, via backprop.

    Returns (loss, {param name: gradient array}).  The loss is the mean
    squared error over all batch entries and output dimensions.
    """
    x = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    n_layers = model.n_layers
    use_dropout = dropout > 0.0
    if use_dropout and rng is None:
        raise InvalidInputError("dropout needs an rng")

    # forward, keeping per-layer pre-activations and activations
    h = x
    acts = [x]  # activation entering each layer
    pre = []
    masks = []
    for i in range(n_layers):
        z = h @ model.weights[i] + model.biases[i]
        pre.append(z)
        if i < n_layers - 1:
            h = _prelu(z, model.slopes[i])
            if use_dropout:
                mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
                h = h * mask
                masks.append(mask)
            else:
                masks.append(None)
        else:
            h = z
        acts.append(h)

    out = acts[-1]
    diff = out - x
    loss = float(np.mean(diff**2))
    grads = {}
    # d loss / d out
    delta = 2.0 * diff / diff.size
    for i in range(n_layers - 1, -1, -1):
        if i < n_layers - 1:
            if masks[i] is not None:
                delta = delta * masks[i]
            z = pre[i]
            negative = z <= 0
            grads[f"a{i}"] = np.sum(delta * np.where(negative, z, 0.0), axis=0)
            delta = delta * np.where(negative, model.slopes[i], 1.0)
        grads[f"W{i}"] = acts[i].T @ delta
        grads[f"b{i}"] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
    return loss, grads


def _adadelta_update(model, grads, lr):
    for name, param in model.parameters():
        g = grads[name]
        eg = model.acc_grad.setdefault(name, np.zeros_like(param))
        ex = model.acc_update.setdefault(name, np.zeros_like(param))
        eg *= ADADELTA_RHO
        eg += (1.0 - ADADELTA_RHO) * g * g
        step = -np.sqrt(ex + ADADELTA_EPS) / np.sqrt(eg + ADADELTA_EPS) * g * lr
        ex *= ADADELTA_RHO
        ex += (1.0 - ADADELTA_RHO) * step * step
        param += step


def ae_train(model: AEModel, windows, cfg: TrainConfig = TrainConfig()):
    """Mini-batch training on (presumed normal) windows.

    Mutates the model; returns the per-epoch mean training loss trace.
    Deterministic for a fixed config seed and data order.
    """
    data = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    if data.shape[0] < 1:
        raise InvalidInputError("need at least one training window")
    rng = np.random.default_rng(cfg.seed)
    trace = []
    for epoch in range(cfg.epochs):
        rate = dropout_rate(cfg, model.epoch)
        order = rng.permutation(data.shape[0])
        losses = []
        for start in range(0, data.shape[0], cfg.batch_size):
            batch = data[order[start : start + cfg.batch_size]]
            loss, grads = ae_loss_and_gradients(model, batch, rate, rng)
            if not np.isfinite(loss):
                raise NumericError(
                    f"loss diverged at epoch {model.epoch} "
                    f"(batch {start // cfg.batch_size}, dropout {rate:.3f})"
                )
            _adadelta_update(model, grads, cfg.learning_rate)
            losses.append(loss * batch.shape[0])
        trace.append(sum(losses) / data.shape[0])
        model.epoch += 1
    return trace


def ae_channels(model, window):
    """(latent, residual, score) for one window or a batch: the encoder
    channel, the subtraction layer, and the mean squared residual."""
    latent, reconstruction = ae_forward(model, window)
    residual = np.asarray(window, dtype=np.float64) - reconstruction
    score = np.mean(residual**2, axis=-1)
    return latent, residual, score


def save_model(model: AEModel, prefix) -> None:
    """Versioned JSON metadata + npz parameter pair at prefix.{json,npz}."""
    prefix = Path(prefix)
    meta = {
        "format_version": 1,
        "sizes": list(model.sizes),
        "epoch": model.epoch,
        "seed": model.seed,
    }
    prefix.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    arrays = {name: np.asarray(p) for name, p in model.parameters()}
    for name, value in model.acc_grad.items():
        arrays[f"Eg_{name}"] = value
    for name, value in model.acc_update.items():
        arrays[f"Ex_{name}"] = value
    np.savez(prefix.with_suffix(".npz"), **arrays)


def load_model(prefix) -> AEModel:
    prefix = Path(prefix)
    meta = json.loads(prefix.with_suffix(".json").read_text())
    if meta.get("format_version") != 1:
        raise InvalidInputError("unknown model format version")
    arrays = np.load(prefix.with_suffix(".npz"))
    sizes = tuple(meta["sizes"])
    n_layers = len(sizes) - 1
    model = AEModel(
        sizes,
        [arrays[f"W{i}"] for i in range(n_layers)],
        [arrays[f"b{i}"] for i in range(n_layers)],
        [arrays[f"a{i}"] for i in range(n_layers - 1)],
        epoch=meta["epoch"],
        seed=meta["seed"],
    )
    for name, _ in model.parameters():
        if f"Eg_{name}" in arrays:
            model.acc_grad[name] = arrays[f"Eg_{name}"]
        if f"Ex_{name}" in arrays:
            model.acc_update[name] = arrays[f"Ex_{name}"]
    return model
