"""Slow, independent reference implementations used to check the fast paths.

Nothing here imports from the gradient or transform code under test beyond
plain forward evaluation; discrepancies therefore point at the fast code.
"""

import numpy as np

from cexfp.nn import batch_loss, cross_entropy_loss


def fd_input_gradient(net, x, label, coords, h=1e-5):
    """Central finite differences of the loss at selected input coordinates."""
    flat = np.asarray(x, dtype=np.float64).reshape(-1)
    out = np.zeros(len(coords))
    for j, c in enumerate(coords):
        xp = flat.copy()
        xp[c] += h
        xm = flat.copy()
        xm[c] -= h
        lp = cross_entropy_loss(net, xp.reshape(x.shape), label)
        lm = cross_entropy_loss(net, xm.reshape(x.shape), label)
        out[j] = (lp - lm) / (2.0 * h)
    return out


def _param_slots(net):
    """Flat view of every parameter coordinate: (layer_idx, name, flat_idx)."""
    slots = []
    for i, name, arr in net.param_items():
        slots.extend((i, name, j) for j in range(arr.size))
    return slots


def _mean_loss_with_nudge(net, x, labels, slot, h):
    i, name, j = slot
    bumped = net.clone()
    arr = bumped.layers[i].params[name]
    arr.reshape(-1)[j] += h
    return float(batch_loss(bumped, x, labels).mean())


def fd_param_gradient(net, x, labels, slots, h=1e-5):
    """Central finite differences of the mean batch loss at parameter slots."""
    out = np.zeros(len(slots))
    for k, slot in enumerate(slots):
        lp = _mean_loss_with_nudge(net, x, labels, slot, h)
        lm = _mean_loss_with_nudge(net, x, labels, slot, -h)
        out[k] = (lp - lm) / (2.0 * h)
    return out


def pick_param_slots(net, count, rng):
    slots = _param_slots(net)
    idx = rng.choice(len(slots), size=count, replace=False)
    return [slots[i] for i in idx]


def relative_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))
    return np.abs(a - b) / scale


def naive_dct2(x):
    """Direct O(N^4) orthonormal 2-D DCT-II of one channel."""
    x = np.asarray(x, dtype=np.float64)
    hh, ww = x.shape
    out = np.zeros((hh, ww))
    for u in range(hh):
        au = np.sqrt(1.0 / hh) if u == 0 else np.sqrt(2.0 / hh)
        for v in range(ww):
            av = np.sqrt(1.0 / ww) if v == 0 else np.sqrt(2.0 / ww)
            s = 0.0
            for i in range(hh):
                for j in range(ww):
                    s += (x[i, j]
                          * np.cos(np.pi * (2 * i + 1) * u / (2.0 * hh))
                          * np.cos(np.pi * (2 * j + 1) * v / (2.0 * ww)))
            out[u, v] = au * av * s
    return out


def naive_idct2(w):
    """Direct O(N^4) inverse of :func:`naive_dct2`."""
    w = np.asarray(w, dtype=np.float64)
    hh, ww = w.shape
    out = np.zeros((hh, ww))
    for i in range(hh):
        for j in range(ww):
            s = 0.0
            for u in range(hh):
                au = np.sqrt(1.0 / hh) if u == 0 else np.sqrt(2.0 / hh)
                for v in range(ww):
                    av = np.sqrt(1.0 / ww) if v == 0 else np.sqrt(2.0 / ww)
                    s += (au * av * w[u, v]
                          * np.cos(np.pi * (2 * i + 1) * u / (2.0 * hh))
                          * np.cos(np.pi * (2 * j + 1) * v / (2.0 * ww)))
            out[i, j] = s
    return out
