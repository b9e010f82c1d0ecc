"""Datasets: a synthetic class-conditional task, CIFAR-10 loading, records.

The synthetic task exists so the full pipeline can run hermetically: each
class is a distinct low-frequency cosine pattern (plus per-image contrast
and uniform pixel noise), which a small CNN learns to high accuracy in a
few epochs.  Class evidence lives entirely in DCT coefficients with
``1 <= i+j <= 4``, a property the frequency-filtering experiments rely on.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptDatasetError, LabelError, ParameterError, ShapeMismatchError
from .frequency import idct2
from .util import DTYPE, derive_seed, make_rng


@dataclass
class Dataset:
    images: np.ndarray  # (N, C, H, W) float64 in [0, 1]
    labels: np.ndarray  # (N,) int64
    classes: int
    split: str = "train"
    name: str = "synthetic"

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=DTYPE)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise ShapeMismatchError("images must be (N, C, H, W)")
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeMismatchError("one label per image required")
        if self.labels.size:
            if self.labels.min() < 0 or self.labels.max() >= self.classes:
                raise LabelError(f"labels must lie in [0, {self.classes})")
            lo, hi = float(self.images.min()), float(self.images.max())
            if lo < 0.0 or hi > 1.0:
                raise ParameterError(f"pixels outside [0,1]: min {lo}, max {hi}")

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_shape(self) -> tuple:
        return self.images.shape[1:]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx], self.classes,
                       split=self.split, name=self.name)


def _band_positions(count: int, height: int, width: int):
    """First ``count`` DCT positions ordered by diagonal i+j, skipping DC."""
    out = []
    s = 1
    while len(out) < count:
        for i in range(min(s, height - 1) + 1):
            j = s - i
            if i < height and 0 <= j < width:
                out.append((i, j))
        s += 1
        if s >= height + width - 1:
            raise ParameterError("image too small for this many classes")
    return out[:count]


def class_templates(classes: int, height: int, width: int) -> np.ndarray:
    """Fixed pixel-space pattern per class, peak amplitude 1, zero mean.

    Class m places one coefficient on the low diagonals with a per-channel
    sign pattern, so classes differ in both position and channel phase.
    """
    pos = _band_positions(classes, height, width)
    out = np.zeros((classes, 3, height, width), dtype=DTYPE)
    for m, (i, j) in enumerate(pos):
        coeff = np.zeros((3, height, width), dtype=DTYPE)
        for c in range(3):
            sign = 1.0 - 2.0 * ((m >> c) & 1)
            coeff[c, i, j] = sign
        pattern = idct2(coeff)
        out[m] = pattern / np.abs(pattern).max()
    return out


def synth_dataset(seed, classes: int = 10, n: int = 2000, height: int = 32,
                  width: int = 32, split: str = "train",
                  amplitude: float = 0.2, noise: float = 0.3,
                  contrast=(0.15, 1.0)) -> Dataset:
    """Deterministic synthetic classification dataset.

    Images are mid-gray plus a per-class cosine template scaled by a random
    per-image contrast, plus i.i.d. uniform pixel noise.  Amplitudes are
    sized so no clipping occurs and pixels stay inside [0, 1].
    """
    if classes < 2:
        raise ParameterError("need at least 2 classes")
    if n < classes:
        raise ParameterError("need at least one example per class")
    if not 0 < contrast[0] <= contrast[1]:
        raise ParameterError("contrast range must satisfy 0 < lo <= hi")
    if amplitude * contrast[1] + noise > 0.5 + 1e-12:
        raise ParameterError("amplitude + noise must stay within [0,1] around 0.5")
    rng = make_rng(derive_seed(seed, "synth", split))
    templates = class_templates(classes, height, width)
    labels = rng.permutation(np.arange(n) % classes).astype(np.int64)
    factor = rng.uniform(contrast[0], contrast[1], size=(n, 1, 1, 1))
    images = 0.5 + amplitude * factor * templates[labels]
    images += rng.uniform(-noise, noise, size=images.shape)
    return Dataset(images, labels, classes, split=split, name="synthetic")


def synth_splits(seed, classes: int = 10, n_train: int = 2000,
                 n_test: int = 1000, height: int = 32, width: int = 32):
    """Train/test pair from one seed; same distribution, disjoint noise."""
    train = synth_dataset(seed, classes, n_train, height, width, split="train")
    test = synth_dataset(seed, classes, n_test, height, width, split="test")
    return train, test


_CIFAR_TRAIN = [f"data_batch_{i}.bin" for i in range(1, 6)]
_CIFAR_TEST = ["test_batch.bin"]
_CIFAR_RECORD = 1 + 3 * 32 * 32
_CIFAR_BATCH_BYTES = 10_000 * _CIFAR_RECORD


def _read_cifar_file(path: str) -> tuple:
    if not os.path.exists(path):
        raise CorruptDatasetError(f"missing dataset file: {path}")
    size = os.path.getsize(path)
    if size != _CIFAR_BATCH_BYTES:
        raise CorruptDatasetError(
            f"corrupt dataset file {path}: {size} bytes, "
            f"expected {_CIFAR_BATCH_BYTES}")
    raw = np.fromfile(path, dtype=np.uint8).reshape(10_000, _CIFAR_RECORD)
    labels = raw[:, 0].astype(np.int64)
    images = raw[:, 1:].reshape(10_000, 3, 32, 32).astype(DTYPE) / 255.0
    return images, labels


def load_cifar10(directory: str):
    """Load the binary-format batches: 50000 train and 10000 test examples."""
    parts = [_read_cifar_file(os.path.join(directory, f)) for f in _CIFAR_TRAIN]
    train = Dataset(np.concatenate([p[0] for p in parts]),
                    np.concatenate([p[1] for p in parts]),
                    classes=10, split="train", name="cifar10")
    ti, tl = _read_cifar_file(os.path.join(directory, _CIFAR_TEST[0]))
    test = Dataset(ti, tl, classes=10, split="test", name="cifar10")
    return train, test


def save_records(data: Dataset, path: str) -> None:
    """Write 1 label byte + C*H*W pixel bytes per record (pixels * 255)."""
    n = len(data)
    pix = np.round(data.images * 255.0).astype(np.uint8).reshape(n, -1)
    rec = np.concatenate([data.labels.astype(np.uint8)[:, None], pix], axis=1)
    rec.tofile(path)


def load_records(path: str, classes: int, image_shape=(3, 32, 32),
                 split: str = "train", name: str = "records") -> Dataset:
    """Inverse of :func:`save_records` (8-bit quantized pixels)."""
    rec_len = 1 + int(np.prod(image_shape))
    if not os.path.exists(path):
        raise CorruptDatasetError(f"missing dataset file: {path}")
    size = os.path.getsize(path)
    if size == 0 or size % rec_len:
        raise CorruptDatasetError(
            f"corrupt dataset file {path}: {size} bytes is not a multiple "
            f"of the {rec_len}-byte record")
    raw = np.fromfile(path, dtype=np.uint8).reshape(-1, rec_len)
    images = raw[:, 1:].reshape((-1,) + tuple(image_shape)).astype(DTYPE) / 255.0
    return Dataset(images, raw[:, 0].astype(np.int64), classes,
                   split=split, name=name)
