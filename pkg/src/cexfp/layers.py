"""Layer primitives with explicit forward and backward passes.

Layers hold parameters but no activations: ``forward`` returns the output
plus an opaque cache and ``backward`` consumes that cache, so every pass is
pure and a single network can serve concurrent readers.  Convolutions are
stride-1 with configurable zero padding; downsampling is done by max pooling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeMismatchError
from .util import DTYPE


@dataclass
class LayerSpec:
    """Serializable layer descriptor: kind plus integer hyperparameters."""

    kind: str
    hyper: dict = field(default_factory=dict)


def _im2col(x: np.ndarray, kh: int, kw: int, pad: int) -> np.ndarray:
    """(B, C, H, W) -> (B*OH*OW, C*kh*kw) patch matrix, stride 1."""
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # (B,C,OH,OW,kh,kw)
    b, c, oh, ow = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * oh * ow, c * kh * kw)
    return np.ascontiguousarray(cols)


def _conv_forward(x, w, b, pad):
    oc, c, kh, kw = w.shape
    bsz, _, h, ww = x.shape
    oh = h + 2 * pad - kh + 1
    ow = ww + 2 * pad - kw + 1
    cols = _im2col(x, kh, kw, pad)
    out = cols @ w.reshape(oc, -1).T
    out += b
    return out.reshape(bsz, oh, ow, oc).transpose(0, 3, 1, 2), cols


class Conv2D:
    """2-D convolution (cross-correlation), stride 1, zero padding."""

    kind = "conv2d"

    def __init__(self, in_channels: int, out_channels: int, kernel: int = 3, pad: int = 1):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.pad = pad
        self.params = {
            "w": np.zeros((out_channels, in_channels, kernel, kernel), dtype=DTYPE),
            "b": np.zeros(out_channels, dtype=DTYPE),
        }

    def spec(self) -> LayerSpec:
        return LayerSpec(self.kind, {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
            "pad": self.pad,
        })

    def init_params(self, rng: np.random.Generator) -> None:
        fan_in = self.in_channels * self.kernel * self.kernel
        std = np.sqrt(2.0 / fan_in)
        self.params["w"] = rng.normal(0.0, std, self.params["w"].shape).astype(DTYPE)
        self.params["b"] = np.zeros(self.out_channels, dtype=DTYPE)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_channels:
            raise ShapeMismatchError(
                f"conv2d expects {self.in_channels} input channels, got {c}")
        return (self.out_channels,
                h + 2 * self.pad - self.kernel + 1,
                w + 2 * self.pad - self.kernel + 1)

    def forward(self, x):
        out, cols = _conv_forward(x, self.params["w"], self.params["b"], self.pad)
        return out, (x.shape, cols)

    def backward(self, dout, cache):
        x_shape, cols = cache
        w = self.params["w"]
        oc = w.shape[0]
        dmat = dout.transpose(0, 2, 3, 1).reshape(-1, oc)
        dw = (dmat.T @ cols).reshape(w.shape)
        db = dmat.sum(axis=0)
        # dx is a correlation of dout with the spatially flipped kernels
        w_flip = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
        dx, _ = _conv_forward(dout, np.ascontiguousarray(w_flip),
                              np.zeros(w.shape[1], dtype=DTYPE),
                              self.kernel - 1 - self.pad)
        if dx.shape != x_shape:
            raise ShapeMismatchError("conv2d backward shape bookkeeping failed")
        return dx, {"w": dw, "b": db}


class ReLU:
    kind = "relu"

    def __init__(self):
        self.params = {}

    def spec(self) -> LayerSpec:
        return LayerSpec(self.kind)

    def init_params(self, rng) -> None:
        pass

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, dout, cache):
        return dout * cache, {}


class MaxPool2D:
    """Non-overlapping max pooling; ties resolve to the first window element."""

    kind = "maxpool2d"

    def __init__(self, size: int = 2):
        self.size = size
        self.params = {}

    def spec(self) -> LayerSpec:
        return LayerSpec(self.kind, {"size": self.size})

    def init_params(self, rng) -> None:
        pass

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if h % self.size or w % self.size:
            raise ShapeMismatchError(
                f"maxpool2d size {self.size} does not divide {h}x{w}")
        return (c, h // self.size, w // self.size)

    def forward(self, x):
        b, c, h, w = x.shape
        s = self.size
        win = (x.reshape(b, c, h // s, s, w // s, s)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(b, c, h // s, w // s, s * s))
        idx = win.argmax(axis=-1)
        out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
        return out, (idx, x.shape)

    def backward(self, dout, cache):
        idx, x_shape = cache
        b, c, h, w = x_shape
        s = self.size
        dwin = np.zeros((b, c, h // s, w // s, s * s), dtype=DTYPE)
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
        dx = (dwin.reshape(b, c, h // s, w // s, s, s)
                  .transpose(0, 1, 2, 4, 3, 5)
                  .reshape(b, c, h, w))
        return dx, {}


class Dense:
    """Fully connected layer; flattens any trailing input dimensions."""

    kind = "dense"

    def __init__(self, in_features: int, out_features: int):
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "w": np.zeros((out_features, in_features), dtype=DTYPE),
            "b": np.zeros(out_features, dtype=DTYPE),
        }

    def spec(self) -> LayerSpec:
        return LayerSpec(self.kind, {
            "in_features": self.in_features,
            "out_features": self.out_features,
        })

    def init_params(self, rng: np.random.Generator) -> None:
        std = np.sqrt(2.0 / self.in_features)
        self.params["w"] = rng.normal(0.0, std, self.params["w"].shape).astype(DTYPE)
        self.params["b"] = np.zeros(self.out_features, dtype=DTYPE)

    def out_shape(self, in_shape):
        flat = int(np.prod(in_shape))
        if flat != self.in_features:
            raise ShapeMismatchError(
                f"dense expects {self.in_features} features, got {flat}")
        return (self.out_features,)

    def forward(self, x):
        orig = x.shape
        x2 = x.reshape(orig[0], -1)
        out = x2 @ self.params["w"].T + self.params["b"]
        return out, (orig, x2)

    def backward(self, dout, cache):
        orig, x2 = cache
        dw = dout.T @ x2
        db = dout.sum(axis=0)
        dx = (dout @ self.params["w"]).reshape(orig)
        return dx, {"w": dw, "b": db}


class Softmax:
    """Terminal softmax over the class axis."""

    kind = "softmax"

    def __init__(self):
        self.params = {}

    def spec(self) -> LayerSpec:
        return LayerSpec(self.kind)

    def init_params(self, rng) -> None:
        pass

    def out_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeMismatchError("softmax expects a flat logit vector")
        return in_shape

    def forward(self, x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=-1, keepdims=True)
        return p, p

    def backward(self, dout, cache):
        p = cache
        inner = (dout * p).sum(axis=-1, keepdims=True)
        return p * (dout - inner), {}


_LAYER_KINDS = {cls.kind: cls for cls in (Conv2D, ReLU, MaxPool2D, Dense, Softmax)}


def layer_from_spec(spec: LayerSpec):
    if spec.kind not in _LAYER_KINDS:
        raise ShapeMismatchError(f"unknown layer kind {spec.kind!r}")
    return _LAYER_KINDS[spec.kind](**spec.hyper)
