"""Orthonormal 2-D DCT, high-pass band masks, and frequency saliency.

Transforms operate on the trailing two axes, so channels (and batches) are
handled independently without copies.  The DCT is the orthonormal type-II
variant, implemented as two matrix products with precomputed cosine bases;
this keeps the transform and its inverse exact transposes of each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .nn import Network, batch_input_gradient, input_gradient
from .util import DTYPE


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis: row u is the u-th cosine mode over n samples."""
    if n < 1:
        raise ParameterError("transform size must be positive")
    i = np.arange(n)
    c = np.cos(np.pi * (2 * i + 1)[None, :] * i[:, None] / (2.0 * n))
    c *= np.sqrt(2.0 / n)
    c[0] *= np.sqrt(0.5)
    c = c.astype(DTYPE)
    c.flags.writeable = False
    return c


def dct2(x: np.ndarray) -> np.ndarray:
    """2-D DCT of the trailing two axes; leading axes pass through."""
    x = np.asarray(x, dtype=DTYPE)
    ch, cw = dct_matrix(x.shape[-2]), dct_matrix(x.shape[-1])
    return ch @ x @ cw.T


def idct2(w: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct2` (exact transpose, so also orthonormal)."""
    w = np.asarray(w, dtype=DTYPE)
    ch, cw = dct_matrix(w.shape[-2]), dct_matrix(w.shape[-1])
    return ch.T @ w @ cw


@dataclass(frozen=True)
class HighPassMask:
    """Multiplicative DCT-domain mask zeroing the band ``1 <= i+j <= k``.

    The DC coefficient (0, 0) is always kept, so filtered images retain
    their mean brightness.
    """

    k: int
    height: int
    width: int
    values: np.ndarray

    @property
    def zero_count(self) -> int:
        return int((self.values == 0).sum())


def make_highpass_mask(height: int, width: int, k: int,
                       zero_dc: bool = False) -> HighPassMask:
    """Build the mask for images of the given spatial size.

    ``k = 0`` is the identity.  The largest admissible ``k`` is
    ``height + width - 2`` (the maximum of ``i + j``); beyond that every
    non-DC coefficient would be dropped and the request is almost surely
    a unit mix-up.  The DC coefficient (0, 0) is kept unless ``zero_dc``
    is set; dropping it too discards the image mean.
    """
    if height < 1 or width < 1:
        raise ParameterError("mask dimensions must be positive")
    if not 0 <= k <= height + width - 2:
        raise ParameterError(
            f"band edge k={k} outside [0, {height + width - 2}] "
            f"for {height}x{width}")
    diag = np.arange(height)[:, None] + np.arange(width)[None, :]
    lo = 0 if zero_dc else 1
    values = np.where((diag >= lo) & (diag <= k), 0.0, 1.0).astype(DTYPE)
    values.flags.writeable = False
    return HighPassMask(int(k), int(height), int(width), values)


def apply_highpass(x: np.ndarray, mask: HighPassMask) -> np.ndarray:
    """Remove the masked band from each channel: IDCT(mask * DCT(x)).

    No value clipping happens here; the result can leave [0, 1] slightly
    and callers decide how to project back.
    """
    x = np.asarray(x, dtype=DTYPE)
    if x.shape[-2:] != (mask.height, mask.width):
        raise ParameterError(
            f"mask {mask.height}x{mask.width} does not fit input {x.shape}")
    return idct2(dct2(x) * mask.values)


def omega_gradient(net: Network, x: np.ndarray, label: int) -> np.ndarray:
    """Loss gradient with respect to the DCT coefficients of one image.

    Because the transform is linear and orthonormal, this is the DCT of the
    pixel-space gradient, channel by channel.
    """
    return dct2(input_gradient(net, x, label))


def frequency_saliency(net: Network, images: np.ndarray, labels,
                       n: int | None = None, batch: int = 100) -> np.ndarray:
    """Mean absolute DCT-domain loss gradient over the first ``n`` images.

    Returns one non-negative H x W map per channel.
    """
    images = np.asarray(images, dtype=DTYPE)
    labels = np.asarray(labels)
    if n is None:
        n = images.shape[0]
    if n < 1:
        raise ParameterError("saliency needs at least one image")
    if n > images.shape[0] or n > labels.shape[0]:
        raise ParameterError(f"asked for {n} images, have {images.shape[0]}")
    total = np.zeros(images.shape[1:], dtype=DTYPE)
    for lo in range(0, n, batch):
        hi = min(lo + batch, n)
        _, dx = batch_input_gradient(net, images[lo:hi], labels[lo:hi])
        total += np.abs(dct2(dx)).sum(axis=0)
    return total / n


def band_mean_saliency(sal: np.ndarray, k: int) -> tuple[float, float]:
    """Mean |saliency| inside the low band ``i+j <= k`` versus outside it.

    The DC coefficient counts as part of the low band.
    """
    sal = np.asarray(sal)
    h, w = sal.shape[-2:]
    diag = np.arange(h)[:, None] + np.arange(w)[None, :]
    low = diag <= k
    mag = np.abs(sal)
    return float(mag[..., low].mean()), float(mag[..., ~low].mean())
