"""Magnitude pruning: exact zero sets, nesting, masks, fine-tuning."""

import numpy as np
import pytest

from cexfp.data import synth_dataset
from cexfp.errors import ParameterError, ShapeMismatchError
from cexfp.layers import Dense, Softmax
from cexfp.nn import Network, build_network, forward, model_hash
from cexfp.pruning import (PruneConfig, SparsityMask, finetune_pruned,
                           magnitude_prune, make_pruned_suite, sparsity)
from cexfp.train import TrainConfig, accuracy, train


def hand_net():
    """One dense layer whose ten weights form a worked example."""
    layer = Dense(5, 2)
    layer.params["w"] = np.array([[0.5, -0.1, 0.3, -0.4, 0.05],
                                  [0.2, -0.25, 0.35, 0.15, -0.45]])
    layer.params["b"] = np.array([0.1, -0.2])
    return Network("hand", (5,), 2, [layer, Softmax()], init_seed=0)


def test_config_validation():
    with pytest.raises(ParameterError):
        PruneConfig(ratio=-0.1)
    with pytest.raises(ParameterError):
        PruneConfig(ratio=1.0)
    with pytest.raises(ParameterError):
        PruneConfig(ratio=0.5, scope="layerwise")
    with pytest.raises(ParameterError):
        PruneConfig(ratio=0.5, finetune_epochs=-1)


def test_hand_example_zeroes_four_smallest():
    """ratio 0.4 on ten weights zeroes |0.05|, |-0.1|, |0.15|, |0.2|."""
    net = hand_net()
    pruned, mask = magnitude_prune(net, PruneConfig(ratio=0.4))
    got = pruned.layers[0].params["w"]
    want = np.array([[0.5, 0.0, 0.3, -0.4, 0.0],
                     [0.0, -0.25, 0.35, 0.0, -0.45]])
    assert np.array_equal(got, want)
    assert np.array_equal(mask.tensors[0]["w"], want != 0)
    # biases untouched, input net unmodified
    assert np.array_equal(pruned.layers[0].params["b"], [0.1, -0.2])
    assert np.array_equal(net.layers[0].params["w"][0], [0.5, -0.1, 0.3, -0.4, 0.05])
    assert sparsity(pruned) == pytest.approx(0.4)


def test_zero_count_rounds():
    net = hand_net()
    pruned, _ = magnitude_prune(net, PruneConfig(ratio=0.33))  # round(3.3) = 3
    assert int((pruned.layers[0].params["w"] == 0).sum()) == 3
    pruned, _ = magnitude_prune(net, PruneConfig(ratio=0.05))  # round(0.5) = 0
    assert sparsity(pruned) == 0.0


def test_ratio_zero_is_identity():
    net = build_network("cnn-tiny", (3, 16, 16), 4, seed=3)
    pruned, mask = magnitude_prune(net, PruneConfig(ratio=0.0))
    assert model_hash(pruned) == model_hash(net)
    assert mask.kept_fraction() == 1.0


def test_zero_sets_nest_and_prune_is_idempotent():
    net = build_network("cnn-small", (3, 32, 32), 10, seed=4)
    prev_zero = None
    for ratio in (0.2, 0.5, 0.8):
        pruned, mask = magnitude_prune(net, PruneConfig(ratio=ratio))
        zero = {(i, tuple(pos)) for i, masks in enumerate(mask.tensors)
                if "w" in masks for pos in np.argwhere(~masks["w"])}
        if prev_zero is not None:
            assert prev_zero <= zero
        prev_zero = zero
        again, mask2 = magnitude_prune(pruned, PruneConfig(ratio=ratio))
        assert model_hash(again) == model_hash(pruned)
        for a, b in zip(mask.tensors, mask2.tensors):
            assert set(a) == set(b)
            for name in a:
                assert np.array_equal(a[name], b[name])


def test_global_scope_uses_one_threshold():
    net = hand_net()
    # add a second dense layer with uniformly small weights; global ranking
    # should concentrate the zeros there
    extra = Dense(2, 2)
    extra.params["w"] = np.array([[0.01, -0.02], [0.03, 0.001]])
    net2 = Network("hand2", (5,), 2,
                   [net.layers[0], extra, Softmax()], init_seed=0)
    pruned, _ = magnitude_prune(net2, PruneConfig(ratio=0.3, scope="global"))
    # round(0.3 * 14) = 4 zeros: the whole small layer
    assert np.array_equal(pruned.layers[1].params["w"], np.zeros((2, 2)))
    assert int((pruned.layers[0].params["w"] == 0).sum()) == 0
    per_layer, _ = magnitude_prune(net2, PruneConfig(ratio=0.3))
    # per-layer rounds within each tensor: 3 + 1 zeros
    assert int((per_layer.layers[0].params["w"] == 0).sum()) == 3
    assert int((per_layer.layers[1].params["w"] == 0).sum()) == 1


def test_sparsity_counts_only_exact_zeros():
    net = hand_net()
    assert sparsity(net) == 0.0
    net.layers[0].params["w"][0, 0] = 0.0
    assert sparsity(net) == pytest.approx(0.1)


def test_finetune_never_resurrects():
    data = synth_dataset(7, classes=4, n=120, height=16, width=16)
    net = build_network("cnn-tiny", data.image_shape, data.classes, seed=8)
    trained, _ = train(net, data, TrainConfig(epochs=3, lr=0.02, seed=9))
    pruned, mask = magnitude_prune(trained, PruneConfig(ratio=0.5))
    tuned = finetune_pruned(pruned, mask, data,
                            TrainConfig(epochs=3, lr=0.002, seed=10))
    for layer, masks in zip(tuned.layers, mask.tensors):
        for name, keep in masks.items():
            assert np.all(layer.params[name][~keep] == 0.0)
    # kept weights actually moved
    assert model_hash(tuned) != model_hash(pruned)
    assert sparsity(tuned) == pytest.approx(sparsity(pruned))


def test_finetune_rejects_wrong_mask():
    data = synth_dataset(7, classes=4, n=40, height=16, width=16)
    net = build_network("cnn-tiny", data.image_shape, data.classes, seed=8)
    other = build_network("cnn-small", (3, 32, 32), 10, seed=0)
    _, mask = magnitude_prune(other, PruneConfig(ratio=0.5))
    with pytest.raises(ShapeMismatchError):
        finetune_pruned(net, mask, data, TrainConfig(epochs=1))


def test_suite_covers_grid_and_recovers():
    data = synth_dataset(11, classes=4, n=300, height=16, width=16)
    net = build_network("cnn-tiny", data.image_shape, data.classes, seed=12)
    trained, _ = train(net, data, TrainConfig(epochs=8, lr=0.02, seed=13))
    base_acc = accuracy(trained, data)
    suite = make_pruned_suite(trained, data, ratios=(0.0, 0.5), repeats=2,
                              seed=14, train_cfg=TrainConfig(epochs=8, lr=0.02),
                              finetune_epochs=2)
    assert len(suite) == 4
    assert sorted({(pm.ratio, pm.repeat) for pm in suite}) == \
        [(0.0, 0), (0.0, 1), (0.5, 0), (0.5, 1)]
    for pm in suite:
        if pm.ratio == 0.0:
            # ratio zero is the base model itself
            assert np.allclose(forward(pm.net, data.images[:8]),
                               forward(trained, data.images[:8]))
            assert pm.accuracy == pytest.approx(base_acc)
        else:
            assert sparsity(pm.net) == pytest.approx(0.5, abs=0.01)
            assert pm.accuracy >= base_acc - 25.0
        assert pm.base_hash == model_hash(trained)


def test_suite_repeats_differ_only_in_finetune():
    data = synth_dataset(11, classes=4, n=200, height=16, width=16)
    net = build_network("cnn-tiny", data.image_shape, data.classes, seed=12)
    trained, _ = train(net, data, TrainConfig(epochs=4, lr=0.02, seed=13))
    suite = make_pruned_suite(trained, data, ratios=(0.5,), repeats=2, seed=15,
                              train_cfg=TrainConfig(epochs=4, lr=0.02),
                              finetune_epochs=1)
    a, b = suite
    # same zero set (deterministic magnitude step), different tuned weights
    za = {tuple(p) for l in a.net.layers if "w" in l.params
          for p in np.argwhere(l.params["w"] == 0)}
    zb = {tuple(p) for l in b.net.layers if "w" in l.params
          for p in np.argwhere(l.params["w"] == 0)}
    assert za == zb
    assert model_hash(a.net) != model_hash(b.net)


def test_suite_validates_repeats():
    data = synth_dataset(0, classes=4, n=40, height=16, width=16)
    net = build_network("cnn-tiny", data.image_shape, data.classes, seed=0)
    with pytest.raises(ParameterError):
        make_pruned_suite(net, data, ratios=(0.5,), repeats=0, seed=0)
