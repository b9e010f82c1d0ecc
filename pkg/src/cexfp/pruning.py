"""Unstructured magnitude pruning with mask-respecting fine-tuning."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import ParameterError, ShapeMismatchError
from .nn import Network, model_hash
from .train import TrainConfig, accuracy, train
from .util import DTYPE, derive_seed

_SCOPES = ("per-layer", "global")


@dataclass(frozen=True)
class PruneConfig:
    ratio: float
    scope: str = "per-layer"
    finetune_epochs: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio < 1.0:
            raise ParameterError(f"prune ratio must lie in [0, 1), got {self.ratio}")
        if self.scope not in _SCOPES:
            raise ParameterError(f"scope must be one of {_SCOPES}")
        if self.finetune_epochs < 0:
            raise ParameterError("finetune epochs must be >= 0")


@dataclass
class SparsityMask:
    """Boolean keep-masks for every prunable tensor, aligned with the layers.

    Only weight tensors appear (biases are never pruned); a missing entry
    means all-kept.
    """

    tensors: list  # one dict per layer, name -> bool ndarray (True = kept)

    def matches(self, net: Network) -> bool:
        if len(self.tensors) != len(net.layers):
            return False
        for layer, masks in zip(net.layers, self.tensors):
            for name, m in masks.items():
                if name not in layer.params or m.shape != layer.params[name].shape:
                    return False
        return True

    def as_multipliers(self) -> list:
        return [{name: m.astype(DTYPE) for name, m in masks.items()}
                for masks in self.tensors]

    def kept_fraction(self) -> float:
        kept = total = 0
        for masks in self.tensors:
            for m in masks.values():
                kept += int(m.sum())
                total += m.size
        return kept / total if total else 1.0


def _prunable(net: Network):
    """(layer_index, array) pairs of weight tensors, biases excluded."""
    return [(i, layer.params["w"]) for i, layer in enumerate(net.layers)
            if "w" in layer.params]


def _zero_smallest(arr: np.ndarray, n_zero: int) -> np.ndarray:
    """Keep-mask zeroing the n smallest magnitudes; ties break on the
    flattened index (stable sort), so zero-sets nest across ratios."""
    keep = np.ones(arr.size, dtype=bool)
    if n_zero > 0:
        order = np.argsort(np.abs(arr).reshape(-1), kind="stable")
        keep[order[:n_zero]] = False
    return keep.reshape(arr.shape)


def magnitude_prune(net: Network, cfg: PruneConfig):
    """Zero the smallest-magnitude weights; returns (pruned net, keep mask).

    Per-layer scope rounds the zero count within each tensor; global scope
    ranks all weights together.  Surviving weights are untouched and the
    input network is never mutated.
    """
    out = net.clone()
    tensors = [dict() for _ in net.layers]
    slots = _prunable(out)
    if cfg.scope == "per-layer":
        for i, arr in slots:
            keep = _zero_smallest(arr, int(round(cfg.ratio * arr.size)))
            arr[~keep] = 0.0
            tensors[i]["w"] = keep
    else:
        flat = np.concatenate([a.reshape(-1) for _, a in slots])
        keep_flat = _zero_smallest(flat, int(round(cfg.ratio * flat.size)))
        pos = 0
        for i, arr in slots:
            keep = keep_flat[pos:pos + arr.size].reshape(arr.shape)
            pos += arr.size
            arr[~keep] = 0.0
            tensors[i]["w"] = keep
    return out, SparsityMask(tensors)


def sparsity(net: Network) -> float:
    """Fraction of prunable weights that are exactly zero."""
    slots = _prunable(net)
    total = sum(a.size for _, a in slots)
    zeros = sum(int((a == 0.0).sum()) for _, a in slots)
    return zeros / total if total else 0.0


def finetune_pruned(net: Network, mask: SparsityMask, data: Dataset,
                    cfg: TrainConfig) -> Network:
    """Train the pruned network while pinning masked weights at zero."""
    if not mask.matches(net):
        raise ShapeMismatchError("mask does not match network layout")
    trained, _ = train(net, data, cfg, mask=mask.as_multipliers())
    return trained


@dataclass
class PrunedModel:
    net: Network
    ratio: float
    repeat: int
    seed: int
    scope: str
    accuracy: float
    base_hash: str = ""


def make_pruned_suite(net: Network, data: Dataset, ratios, repeats: int, seed,
                      train_cfg: TrainConfig | None = None,
                      scope: str = "per-layer", finetune_epochs: int = 3,
                      eval_data: Dataset | None = None) -> list:
    """Fine-tuned pruned copies for every (ratio, repeat) cell.

    The magnitude step is deterministic, so repeats differ only in their
    fine-tuning data order.  Fine-tuning runs at 0.1x the training rate by
    default; a ratio-0 cell is the base model itself and skips fine-tuning.
    """
    if repeats < 1:
        raise ParameterError("repeats must be >= 1")
    if train_cfg is None:
        train_cfg = TrainConfig()
    eval_data = eval_data if eval_data is not None else data
    base_hash = model_hash(net)
    out = []
    for ratio in ratios:
        for rep in range(repeats):
            cell_seed = derive_seed(seed, "prune", f"{ratio:g}", rep)
            cfg = PruneConfig(ratio=ratio, scope=scope,
                              finetune_epochs=finetune_epochs, seed=cell_seed)
            pruned, mask = magnitude_prune(net, cfg)
            if cfg.finetune_epochs > 0 and ratio > 0:
                ft_cfg = replace(train_cfg, epochs=cfg.finetune_epochs,
                                 lr=0.1 * train_cfg.lr, seed=cell_seed)
                pruned = finetune_pruned(pruned, mask, data, ft_cfg)
            out.append(PrunedModel(net=pruned, ratio=float(ratio), repeat=rep,
                                   seed=cell_seed, scope=scope,
                                   accuracy=accuracy(pruned, eval_data),
                                   base_hash=base_hash))
    return out
