"""Image and plot writers: shapes, determinism, round trips."""

import hashlib
import os

import numpy as np
import pytest
from PIL import Image

from cexfp.errors import ParameterError, ShapeMismatchError
from cexfp.render import (contact_sheet, load_saliency_csv, saliency_csv,
                          saliency_png, save_pgm, save_png, scatter_svg,
                          to_uint8)


def sha(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def test_to_uint8_clips_and_rounds():
    arr = np.array([-0.5, 0.0, 0.5, 1.0, 1.5])
    assert np.array_equal(to_uint8(arr), [0, 0, 128, 255, 255])


def test_save_png_validates(tmp_path):
    path = os.path.join(tmp_path, "img.png")
    with pytest.raises(ParameterError):
        save_png(np.zeros((4, 4)), path)  # not uint8
    with pytest.raises(ShapeMismatchError):
        save_png(np.zeros((4, 4, 2), dtype=np.uint8), path)
    save_png(np.zeros((4, 4), dtype=np.uint8), path)
    assert Image.open(path).size == (4, 4)


def test_contact_sheet_grid_and_determinism(tmp_path):
    rng = np.random.default_rng(0)
    imgs = rng.uniform(0, 1, size=(7, 3, 5, 6))
    path = os.path.join(tmp_path, "sheet.png")
    rows, cols = contact_sheet(imgs, path, cols=3, pad=1, meta={"a": "1"})
    assert (rows, cols) == (3, 3)
    with Image.open(path) as im:
        assert im.size == (3 * 6 + 4 * 1, 3 * 5 + 4 * 1)
        assert im.text == {"a": "1"}
    first = sha(path)
    contact_sheet(imgs, path, cols=3, pad=1, meta={"a": "1"})
    assert sha(path) == first
    with pytest.raises(ParameterError):
        contact_sheet(imgs[:0], path)
    with pytest.raises(ShapeMismatchError):
        contact_sheet(imgs[0], path)
    with pytest.raises(ParameterError):
        contact_sheet(imgs, path, cols=0)


def test_contact_sheet_caps_columns(tmp_path):
    imgs = np.full((2, 1, 4, 4), 0.5)
    rows, cols = contact_sheet(imgs, os.path.join(tmp_path, "s.png"), cols=10)
    assert (rows, cols) == (1, 2)


def test_save_pgm_plain_text(tmp_path):
    path = os.path.join(tmp_path, "map.pgm")
    save_pgm(np.array([[0.0, 1.0], [0.5, 0.25]]), path)
    lines = open(path).read().splitlines()
    assert lines[:3] == ["P2", "2 2", "255"]
    assert lines[3].split() == ["0", "255"]
    save_pgm(np.full((2, 2), 3.3), path)  # constant map renders as zeros
    assert open(path).read().splitlines()[3] == "0 0"
    with pytest.raises(ShapeMismatchError):
        save_pgm(np.zeros((2, 2, 2)), path)


def test_saliency_png_modes(tmp_path):
    rng = np.random.default_rng(1)
    path = os.path.join(tmp_path, "sal.png")
    saliency_png(rng.uniform(0, 1, size=(3, 8, 8)), path)
    with Image.open(path) as im:
        assert im.mode == "RGB"
    saliency_png(rng.uniform(0, 1, size=(8, 8)), path)
    with Image.open(path) as im:
        assert im.mode == "L"
    with pytest.raises(ShapeMismatchError):
        saliency_png(rng.uniform(size=(2, 3, 8, 8)), path)


def test_saliency_csv_round_trip(tmp_path):
    sal = np.random.default_rng(2).uniform(0, 1, size=(3, 4, 5))
    path = os.path.join(tmp_path, "sal.csv")
    saliency_csv(sal, path)
    header = open(path).readline().strip()
    assert header == "channel,row,col,value"
    assert np.array_equal(load_saliency_csv(path), sal)
    empty = os.path.join(tmp_path, "empty.csv")
    with open(empty, "w") as f:
        f.write("channel,row,col,value\n")
    with pytest.raises(ParameterError):
        load_saliency_csv(empty)


def test_scatter_svg_deterministic(tmp_path):
    path = os.path.join(tmp_path, "plot.svg")
    points = {"ltrc": [(14.0, 83.0), (41.0, 95.0)],
              "vanilla": [(64.0, 97.0)], "empty": []}
    assert scatter_svg(points, path, title="ratio 0.8") is True
    first = sha(path)
    assert scatter_svg(points, path, title="ratio 0.8") is True
    assert sha(path) == first
    text = open(path).read()
    assert "<svg" in text and "ltrc" in text
