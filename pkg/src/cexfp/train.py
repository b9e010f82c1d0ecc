"""SGD training for base models, seed variants, and pruning fine-tunes."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import EmptyInputError, ParameterError, ShapeMismatchError, TrainingDivergedError
from .nn import Network, build_network, forward, param_gradient_and_loss
from .util import derive_seed, make_rng


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ParameterError("batch size must be >= 1")
        if self.lr < 0:
            raise ParameterError("learning rate must be >= 0")


def accuracy(net: Network, data: Dataset, batch: int = 200) -> float:
    """Percentage of examples whose argmax prediction matches the label.

    Argmax ties break to the lowest class index, so the value is
    deterministic even for degenerate networks.
    """
    if len(data) == 0:
        raise EmptyInputError("accuracy needs a non-empty dataset")
    hits = 0
    for lo in range(0, len(data), batch):
        probs = forward(net, data.images[lo:lo + batch])
        hits += int((probs.argmax(axis=1) == data.labels[lo:lo + batch]).sum())
    return 100.0 * hits / len(data)


def _sgd_epoch(net: Network, data: Dataset, cfg: TrainConfig, velocity, order,
               mask=None) -> float:
    """One pass of momentum SGD over ``order``; returns the mean batch loss.

    ``mask`` (same layout as the parameters, True = trainable) freezes
    masked-out weights at exactly zero; see :mod:`cexfp.pruning`.
    """
    total, batches = 0.0, 0
    for lo in range(0, len(order), cfg.batch_size):
        idx = order[lo:lo + cfg.batch_size]
        grads, loss = param_gradient_and_loss(net, data.images[idx],
                                              data.labels[idx])
        total += loss
        batches += 1
        for li, layer in enumerate(net.layers):
            for name, g in grads[li].items():
                if cfg.weight_decay and name == "w":
                    g = g + cfg.weight_decay * layer.params[name]
                v = velocity[li][name]
                v *= cfg.momentum
                v += g
                step = cfg.lr * v
                if mask is not None and name in mask[li]:
                    step = step * mask[li][name]
                layer.params[name] -= step
                if mask is not None and name in mask[li]:
                    layer.params[name] *= mask[li][name]
    return total / max(batches, 1)


def train(net: Network, data: Dataset, cfg: TrainConfig, mask=None):
    """Train a copy of ``net``; returns (trained network, per-epoch history).

    History entries record the running mean batch loss and the post-epoch
    training accuracy.  The input network is never mutated.
    """
    if net.input_shape != data.image_shape:
        raise ShapeMismatchError(
            f"network input {net.input_shape} != data images {data.image_shape}")
    if net.classes != data.classes:
        raise ShapeMismatchError("class count mismatch between network and data")
    out = net.clone()
    velocity = [{name: np.zeros_like(arr) for name, arr in layer.params.items()}
                for layer in out.layers]
    rng = make_rng(derive_seed(cfg.seed, "shuffle"))
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(data))
        mean_loss = _sgd_epoch(out, data, cfg, velocity, order, mask=mask)
        if not np.isfinite(mean_loss):
            raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
        history.append({"epoch": epoch, "loss": mean_loss,
                        "accuracy": accuracy(out, data)})
    return out, history


def train_variants(arch_id: str, data: Dataset, cfg: TrainConfig, seeds):
    """One trained network per seed: fresh initialization plus fresh shuffle."""
    if not seeds:
        raise ParameterError("need at least one seed")
    nets = []
    for s in seeds:
        fresh = build_network(arch_id, data.image_shape, data.classes, seed=s)
        trained, _ = train(fresh, data, replace(cfg, seed=int(s)))
        nets.append(trained)
    return nets
