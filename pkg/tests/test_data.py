"""Dataset construction, validation, and file round trips."""

import os

import numpy as np
import pytest

from cexfp.data import (Dataset, class_templates, load_cifar10, load_records,
                        save_records, synth_dataset, synth_splits)
from cexfp.errors import (CorruptDatasetError, LabelError, ParameterError,
                          ShapeMismatchError)
from cexfp.frequency import dct2


def test_dataset_validates_shape_and_labels():
    imgs = np.zeros((4, 3, 8, 8)) + 0.5
    with pytest.raises(ShapeMismatchError):
        Dataset(np.zeros((4, 8, 8)), np.zeros(4, dtype=int), classes=2)
    with pytest.raises(ShapeMismatchError):
        Dataset(imgs, np.zeros(3, dtype=int), classes=2)
    with pytest.raises(LabelError):
        Dataset(imgs, np.array([0, 1, 2, 1]), classes=2)
    with pytest.raises(LabelError):
        Dataset(imgs, np.array([0, 1, -1, 1]), classes=2)
    with pytest.raises(ParameterError):
        Dataset(imgs + 0.6, np.zeros(4, dtype=int), classes=2)


def test_subset_keeps_metadata():
    data = synth_dataset(0, n=20, classes=4, height=8, width=8)
    sub = data.subset(np.arange(5))
    assert len(sub) == 5
    assert sub.classes == 4 and sub.split == data.split
    assert np.array_equal(sub.images, data.images[:5])


def test_synth_balanced_and_bounded():
    data = synth_dataset(3, classes=10, n=200, height=16, width=16)
    counts = np.bincount(data.labels, minlength=10)
    assert counts.min() == counts.max() == 20
    assert data.images.min() >= 0.0 and data.images.max() <= 1.0
    assert data.images.shape == (200, 3, 16, 16)


def test_synth_deterministic_and_split_disjoint():
    a = synth_dataset(5, n=50, height=8, width=8)
    b = synth_dataset(5, n=50, height=8, width=8)
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.labels, b.labels)
    c = synth_dataset(6, n=50, height=8, width=8)
    assert not np.array_equal(a.images, c.images)
    train, test = synth_splits(5, n_train=50, n_test=50, height=8, width=8)
    assert np.array_equal(train.images, a.images)
    assert not np.array_equal(train.images, test.images)


def test_class_templates_live_in_low_band():
    """All class evidence sits on DCT diagonals 1 <= i+j <= 4."""
    t = class_templates(10, 32, 32)
    coeffs = dct2(t)
    i, j = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
    outside = (i + j < 1) | (i + j > 4)
    assert np.abs(coeffs[:, :, outside]).max() < 1e-12
    assert np.abs(coeffs[:, :, ~outside]).max() > 0
    # peak-normalized, zero-mean patterns
    assert np.allclose(np.abs(t).max(axis=(1, 2, 3)), 1.0)
    assert np.allclose(t.mean(axis=(2, 3)), 0.0, atol=1e-12)


def test_templates_pairwise_distinct():
    t = class_templates(10, 16, 16)
    for a in range(10):
        for b in range(a + 1, 10):
            assert np.abs(t[a] - t[b]).max() > 0.1


def test_synth_parameter_validation():
    with pytest.raises(ParameterError):
        synth_dataset(0, classes=1)
    with pytest.raises(ParameterError):
        synth_dataset(0, classes=10, n=5)
    with pytest.raises(ParameterError):
        synth_dataset(0, amplitude=0.4, noise=0.3)  # 0.4 + 0.3 > 0.5
    with pytest.raises(ParameterError):
        synth_dataset(0, contrast=(0.0, 1.0))
    with pytest.raises(ParameterError):
        synth_dataset(0, contrast=(0.8, 0.2))


def test_records_round_trip(tmp_path):
    data = synth_dataset(1, n=30, classes=5, height=8, width=8)
    path = os.path.join(tmp_path, "records.bin")
    save_records(data, path)
    assert os.path.getsize(path) == 30 * (1 + 3 * 8 * 8)
    back = load_records(path, classes=5, image_shape=(3, 8, 8))
    assert np.array_equal(back.labels, data.labels)
    # 8-bit quantization: half-step worst case
    assert np.abs(back.images - data.images).max() <= 0.5 / 255 + 1e-12


def test_load_records_rejects_bad_sizes(tmp_path):
    path = os.path.join(tmp_path, "bad.bin")
    with pytest.raises(CorruptDatasetError):
        load_records(path, classes=5, image_shape=(3, 8, 8))
    with open(path, "wb") as f:
        f.write(b"\x00" * 100)  # not a multiple of 193
    with pytest.raises(CorruptDatasetError, match="100 bytes"):
        load_records(path, classes=5, image_shape=(3, 8, 8))


def _write_cifar_file(path, rng):
    labels = rng.integers(0, 10, size=10_000, dtype=np.uint8)[:, None]
    pixels = rng.integers(0, 256, size=(10_000, 3072), dtype=np.uint8)
    np.concatenate([labels, pixels], axis=1).tofile(path)


def test_cifar10_loader(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(1, 6):
        _write_cifar_file(os.path.join(tmp_path, f"data_batch_{i}.bin"), rng)
    _write_cifar_file(os.path.join(tmp_path, "test_batch.bin"), rng)
    train, test = load_cifar10(str(tmp_path))
    assert len(train) == 50_000 and len(test) == 10_000
    assert train.image_shape == (3, 32, 32)
    assert train.images.max() <= 1.0 and train.images.min() >= 0.0


def test_cifar10_names_corrupt_file(tmp_path):
    for i in range(1, 6):
        _write_cifar_file(os.path.join(tmp_path, f"data_batch_{i}.bin"),
                          np.random.default_rng(i))
    with open(os.path.join(tmp_path, "test_batch.bin"), "wb") as f:
        f.write(b"\x00" * 123)
    with pytest.raises(CorruptDatasetError, match="test_batch.bin.*123 bytes"):
        load_cifar10(str(tmp_path))
    os.remove(os.path.join(tmp_path, "data_batch_3.bin"))
    with pytest.raises(CorruptDatasetError, match="data_batch_3.bin"):
        load_cifar10(str(tmp_path))
