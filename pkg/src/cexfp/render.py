"""Rendering helpers: contact sheets, saliency maps, and metric plots.

Every writer here is deterministic: PNG text chunks carry only caller-supplied
metadata, PGM output is plain text, and the SVG backend is configured to omit
timestamps so reruns produce byte-identical files.
"""

from __future__ import annotations

import csv

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .errors import ParameterError, ShapeMismatchError


def to_uint8(images: np.ndarray) -> np.ndarray:
    """Map [0, 1] float images to uint8 with round-half-even quantization."""
    arr = np.clip(np.asarray(images, dtype=np.float64), 0.0, 1.0)
    return np.rint(arr * 255.0).astype(np.uint8)


def _png_info(meta) -> PngInfo:
    info = PngInfo()
    for key in sorted(meta or {}):
        info.add_text(str(key), str(meta[key]))
    return info


def save_png(array: np.ndarray, path: str, meta: dict | None = None) -> None:
    """Write a uint8 array as PNG: (H, W) grayscale or (H, W, 3) RGB."""
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        raise ParameterError("save_png expects uint8 input")
    if arr.ndim == 2:
        img = Image.fromarray(arr, mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        img = Image.fromarray(arr, mode="RGB")
    else:
        raise ShapeMismatchError(f"cannot render array of shape {arr.shape}")
    img.save(path, format="PNG", pnginfo=_png_info(meta))


def contact_sheet(images: np.ndarray, path: str, cols: int = 10, pad: int = 2,
                  meta: dict | None = None) -> tuple:
    """Tile a stack of (N, C, H, W) images into one PNG; returns grid shape."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4:
        raise ShapeMismatchError("contact_sheet expects (N, C, H, W) images")
    n, c, h, w = images.shape
    if n == 0:
        raise ParameterError("contact_sheet needs at least one image")
    if cols < 1 or pad < 0:
        raise ParameterError("cols must be >= 1 and pad >= 0")
    cols = min(cols, n)
    rows = -(-n // cols)
    grey = c == 1
    sheet = np.full((rows * h + (rows + 1) * pad,
                     cols * w + (cols + 1) * pad,
                     1 if grey else 3), 255, dtype=np.uint8)
    tiles = to_uint8(images)
    for i in range(n):
        r, col = divmod(i, cols)
        y = pad + r * (h + pad)
        x = pad + col * (w + pad)
        tile = tiles[i].transpose(1, 2, 0)
        if not grey and c != 3:
            tile = tile[:, :, :1].repeat(3, axis=2)
        sheet[y:y + h, x:x + w] = tile
    save_png(sheet[:, :, 0] if grey else sheet, path, meta=meta)
    return rows, cols


def save_pgm(matrix: np.ndarray, path: str) -> None:
    """Write a 2-D map as plain-text PGM, scaled to the full 0..255 range."""
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise ShapeMismatchError("save_pgm expects a 2-D array")
    lo, hi = float(mat.min()), float(mat.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    pix = np.rint((mat - lo) * scale).astype(np.uint8)
    lines = [f"P2", f"{mat.shape[1]} {mat.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in pix]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def saliency_png(saliency: np.ndarray, path: str, meta: dict | None = None) -> None:
    """Render per-channel saliency as RGB (3 channels) or grayscale PNG.

    Each channel is normalized to its own [min, max] so structure stays
    visible regardless of absolute gradient scale.
    """
    sal = np.asarray(saliency, dtype=np.float64)
    if sal.ndim == 2:
        sal = sal[None]
    if sal.ndim != 3:
        raise ShapeMismatchError("saliency_png expects (C, H, W) or (H, W)")
    norm = np.empty_like(sal)
    for ch in range(sal.shape[0]):
        lo, hi = float(sal[ch].min()), float(sal[ch].max())
        norm[ch] = (sal[ch] - lo) / (hi - lo) if hi > lo else 0.0
    pix = np.rint(norm * 255.0).astype(np.uint8)
    if sal.shape[0] == 3:
        save_png(pix.transpose(1, 2, 0), path, meta=meta)
    else:
        save_png(np.rint(norm.mean(axis=0) * 255.0).astype(np.uint8), path,
                 meta=meta)


def saliency_csv(saliency: np.ndarray, path: str) -> None:
    """Write (C, H, W) saliency as long-form CSV: channel, row, col, value."""
    sal = np.asarray(saliency, dtype=np.float64)
    if sal.ndim == 2:
        sal = sal[None]
    if sal.ndim != 3:
        raise ShapeMismatchError("saliency_csv expects (C, H, W) or (H, W)")
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "row", "col", "value"])
        c, h, w = sal.shape
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    writer.writerow([ch, i, j, repr(float(sal[ch, i, j]))])


def load_saliency_csv(path: str) -> np.ndarray:
    """Inverse of saliency_csv; returns the (C, H, W) array."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))[1:]
    if not rows:
        raise ParameterError(f"no saliency rows in {path}")
    c = max(int(r[0]) for r in rows) + 1
    h = max(int(r[1]) for r in rows) + 1
    w = max(int(r[2]) for r in rows) + 1
    sal = np.zeros((c, h, w), dtype=np.float64)
    for ch, i, j, v in rows:
        sal[int(ch), int(i), int(j)] = float(v)
    return sal


def scatter_svg(points: dict, path: str, title: str = "") -> bool:
    """Scatter robustness vs transferability per method; one marker per cell.

    ``points`` maps series label -> list of (transferability, robustness)
    pairs.  Needs matplotlib; returns False (writing nothing) if it is not
    installed.  Output is timestamp-free so reruns are byte-identical.
    """
    try:
        import matplotlib
    except ImportError:
        return False
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "cexfp"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        markers = "osD^vP*X"
        for idx, label in enumerate(sorted(points)):
            pairs = points[label]
            if not pairs:
                continue
            xs = [p[0] for p in pairs]
            ys = [p[1] for p in pairs]
            ax.scatter(xs, ys, label=label, marker=markers[idx % len(markers)])
        ax.set_xlabel("transferability (%)")
        ax.set_ylabel("robustness (%)")
        ax.set_xlim(-2, 102)
        ax.set_ylim(-2, 102)
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return True
