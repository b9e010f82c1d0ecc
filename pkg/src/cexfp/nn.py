"""Networks: forward inference, losses, gradients, and weight perturbation.

A :class:`Network` is an ordered stack of layers ending in a single softmax.
All operations here are pure with respect to their inputs; training-time
mutation lives in :mod:`cexfp.train`.  Inputs are images in ``[0, 1]`` shaped
``(C, H, W)`` or batches ``(B, C, H, W)``; outputs are probability vectors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, LabelError, ParameterError, ShapeMismatchError
from .layers import Conv2D, Dense, MaxPool2D, ReLU, Softmax, layer_from_spec
from .util import DTYPE, make_rng


class Network:
    """Layered classifier with value semantics at the public interface."""

    def __init__(self, arch_id: str, input_shape, classes: int, layers, init_seed=None):
        self.arch_id = arch_id
        self.input_shape = tuple(int(d) for d in input_shape)
        self.classes = int(classes)
        self.layers = list(layers)
        self.init_seed = init_seed
        self._check_wiring()

    def _check_wiring(self) -> None:
        if sum(1 for l in self.layers if l.kind == "softmax") != 1:
            raise ShapeMismatchError("network needs exactly one softmax layer")
        if self.layers[-1].kind != "softmax":
            raise ShapeMismatchError("softmax must be the terminal layer")
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.out_shape(shape)
        if shape != (self.classes,):
            raise ShapeMismatchError(
                f"network produces {shape}, expected ({self.classes},)")

    def param_items(self):
        """Yield (layer_index, name, array) for every parameter, in order."""
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield i, name, layer.params[name]

    def n_params(self) -> int:
        return sum(a.size for _, _, a in self.param_items())

    def clone(self) -> "Network":
        """Deep copy: fresh layer objects, copied parameter arrays."""
        layers = []
        for layer in self.layers:
            new = layer_from_spec(layer.spec())
            for name, arr in layer.params.items():
                new.params[name] = arr.copy()
            layers.append(new)
        return Network(self.arch_id, self.input_shape, self.classes, layers,
                       init_seed=self.init_seed)


@dataclass
class WeightPerturbation:
    """Per-parameter offsets, each bounded by ``delta`` in absolute value."""

    delta: float
    offsets: list  # one dict per layer, keyed like layer.params

    def negated(self) -> "WeightPerturbation":
        return WeightPerturbation(self.delta,
                                  [{k: -v for k, v in d.items()} for d in self.offsets])


_ARCHITECTURES = {}


def _register(arch_id):
    def deco(fn):
        _ARCHITECTURES[arch_id] = fn
        return fn
    return deco


@_register("cnn-small")
def _cnn_small(input_shape, classes):
    c, h, w = input_shape
    return [
        Conv2D(c, 8), ReLU(), MaxPool2D(2),
        Conv2D(8, 16), ReLU(), MaxPool2D(2),
        Conv2D(16, 32), ReLU(), MaxPool2D(2),
        Dense(32 * (h // 8) * (w // 8), 64), ReLU(),
        Dense(64, classes), Softmax(),
    ]


@_register("cnn-wide")
def _cnn_wide(input_shape, classes):
    c, h, w = input_shape
    return [
        Conv2D(c, 16), ReLU(), MaxPool2D(2),
        Conv2D(16, 32), ReLU(), MaxPool2D(2),
        Conv2D(32, 64), ReLU(), MaxPool2D(2),
        Dense(64 * (h // 8) * (w // 8), 128), ReLU(),
        Dense(128, classes), Softmax(),
    ]


@_register("cnn-tiny")
def _cnn_tiny(input_shape, classes):
    c, h, w = input_shape
    return [
        Conv2D(c, 4), ReLU(), MaxPool2D(2),
        Conv2D(4, 8), ReLU(), MaxPool2D(2),
        Dense(8 * (h // 4) * (w // 4), classes), Softmax(),
    ]


def architecture_ids():
    return sorted(_ARCHITECTURES)


def build_network(arch_id: str, input_shape=(3, 32, 32), classes: int = 10,
                  seed: int = 0) -> Network:
    """Construct a network with He fan-in initialization from ``seed``."""
    if arch_id not in _ARCHITECTURES:
        raise ParameterError(f"unknown architecture {arch_id!r}; "
                             f"known: {architecture_ids()}")
    layers = _ARCHITECTURES[arch_id](tuple(input_shape), classes)
    rng = make_rng(seed)
    for layer in layers:
        layer.init_params(rng)
    return Network(arch_id, input_shape, classes, layers, init_seed=int(seed))


def _as_batch(net: Network, x: np.ndarray):
    x = np.asarray(x, dtype=DTYPE)
    if x.shape == net.input_shape:
        return x[None], True
    if x.ndim == len(net.input_shape) + 1 and x.shape[1:] == net.input_shape:
        return x, False
    raise ShapeMismatchError(
        f"input shape {x.shape} does not match network input {net.input_shape}")


def _logits(net: Network, xb: np.ndarray, want_caches: bool = False):
    caches = []
    h = xb
    for layer in net.layers[:-1]:
        h, cache = layer.forward(h)
        caches.append(cache)
    return (h, caches) if want_caches else h


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one image ``(C,H,W)`` or a batch ``(B,C,H,W)``."""
    xb, single = _as_batch(net, x)
    probs, _ = net.layers[-1].forward(_logits(net, xb))
    return probs[0] if single else probs


def _check_labels(net: Network, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= net.classes):
        raise LabelError(f"labels must lie in [0, {net.classes})")
    return labels.astype(np.int64)


def _losses_from_logits(z: np.ndarray, labels: np.ndarray) -> np.ndarray:
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    return lse - z[np.arange(z.shape[0]), labels]


def batch_loss(net: Network, x: np.ndarray, labels) -> np.ndarray:
    """Per-example cross-entropy losses for a batch."""
    xb, _ = _as_batch(net, x)
    labels = _check_labels(net, np.atleast_1d(labels))
    if labels.shape != (xb.shape[0],):
        raise ShapeMismatchError("one label per image required")
    return _losses_from_logits(_logits(net, xb), labels)


def cross_entropy_loss(net: Network, x: np.ndarray, label: int) -> float:
    """Cross-entropy of the softmax output against ``label`` (always >= 0)."""
    if not 0 <= int(label) < net.classes:
        raise LabelError(f"label {label} outside [0, {net.classes})")
    xb, single = _as_batch(net, x)
    if not single:
        raise ShapeMismatchError("cross_entropy_loss takes a single image")
    return float(batch_loss(net, x, [int(label)])[0])


def _backprop(net: Network, caches, dlogits: np.ndarray, want_params: bool):
    grads = [None] * (len(net.layers) - 1)
    d = dlogits
    for i in range(len(net.layers) - 2, -1, -1):
        d, g = net.layers[i].backward(d, caches[i])
        grads[i] = g
    if want_params:
        return d, grads + [{}]
    return d


def batch_input_gradient(net: Network, x: np.ndarray, labels):
    """Per-example losses and loss gradients with respect to the inputs."""
    xb, _ = _as_batch(net, x)
    labels = _check_labels(net, np.atleast_1d(labels))
    z, caches = _logits(net, xb, want_caches=True)
    losses = _losses_from_logits(z, labels)
    p, _ = net.layers[-1].forward(z)
    dlogits = p.copy()
    dlogits[np.arange(z.shape[0]), labels] -= 1.0
    dx = _backprop(net, caches, dlogits, want_params=False)
    return losses, dx


def input_gradient(net: Network, x: np.ndarray, label: int) -> np.ndarray:
    """Analytic gradient of ``cross_entropy_loss`` with respect to ``x``."""
    if not 0 <= int(label) < net.classes:
        raise LabelError(f"label {label} outside [0, {net.classes})")
    xb, single = _as_batch(net, x)
    if not single:
        raise ShapeMismatchError("input_gradient takes a single image")
    _, dx = batch_input_gradient(net, xb, [int(label)])
    return dx[0]


def param_gradient_and_loss(net: Network, x: np.ndarray, labels):
    """Per-parameter gradients of the mean batch loss, plus that loss."""
    xb, _ = _as_batch(net, x)
    labels = _check_labels(net, np.atleast_1d(labels))
    if xb.shape[0] == 0 or labels.size == 0:
        raise EmptyInputError("param_gradient needs a non-empty batch")
    if labels.shape != (xb.shape[0],):
        raise ShapeMismatchError("one label per image required")
    z, caches = _logits(net, xb, want_caches=True)
    mean_loss = float(_losses_from_logits(z, labels).mean())
    p, _ = net.layers[-1].forward(z)
    dlogits = p.copy()
    dlogits[np.arange(z.shape[0]), labels] -= 1.0
    dlogits /= xb.shape[0]
    _, grads = _backprop(net, caches, dlogits, want_params=True)
    return grads, mean_loss


def param_gradient(net: Network, x: np.ndarray, labels):
    """Gradient of the mean batch loss for every parameter.

    Returns one dict per layer, keyed like ``layer.params`` (empty for
    parameterless layers).
    """
    return param_gradient_and_loss(net, x, labels)[0]


def sample_perturbation(net: Network, delta: float, rng) -> WeightPerturbation:
    """Draw i.i.d. uniform offsets on ``[-delta, delta]`` for every parameter."""
    if delta < 0:
        raise ParameterError("delta must be non-negative")
    rng = make_rng(rng)
    offsets = []
    for layer in net.layers:
        if delta == 0:
            offsets.append({name: np.zeros_like(arr)
                            for name, arr in layer.params.items()})
        else:
            offsets.append({name: rng.uniform(-delta, delta, arr.shape).astype(DTYPE)
                            for name, arr in layer.params.items()})
    return WeightPerturbation(float(delta), offsets)


def apply_perturbation(net: Network, p: WeightPerturbation) -> Network:
    """Return a new network with parameters shifted by the offsets."""
    if len(p.offsets) != len(net.layers):
        raise ShapeMismatchError("perturbation does not match network layout")
    out = net.clone()
    for layer, off in zip(out.layers, p.offsets):
        if set(off) != set(layer.params):
            raise ShapeMismatchError("perturbation does not match network layout")
        for name, d in off.items():
            if d.shape != layer.params[name].shape:
                raise ShapeMismatchError(
                    f"offset shape {d.shape} != parameter shape "
                    f"{layer.params[name].shape}")
            layer.params[name] = layer.params[name] + d
    return out


def model_hash(net: Network) -> str:
    """Content hash of architecture plus parameters (hex sha256)."""
    h = hashlib.sha256()
    header = {
        "arch_id": net.arch_id,
        "input_shape": list(net.input_shape),
        "classes": net.classes,
        "layers": [[l.spec().kind, sorted(l.spec().hyper.items())] for l in net.layers],
    }
    h.update(json.dumps(header, sort_keys=True).encode())
    for _, _, arr in net.param_items():
        h.update(np.ascontiguousarray(arr, dtype=DTYPE).tobytes())
    return h.hexdigest()
