"""Train a small classifier, then squeeze it with magnitude pruning.

Walks through the model-owner side of the story: fit a compact CNN on the
synthetic dataset, zero out the smallest weights at increasing ratios, and
watch how much accuracy a short masked fine-tune claws back.  Everything
runs on the CPU in well under a minute.
"""

import numpy as np

from cexfp.data import synth_splits
from cexfp.pruning import PruneConfig, magnitude_prune, make_pruned_suite, sparsity
from cexfp.train import TrainConfig, accuracy, train_variants


def zero_positions(net):
    """Concatenated is-zero flags over the prunable weight tensors."""
    return np.concatenate([(layer.params["w"] == 0.0).reshape(-1)
                           for layer in net.layers if "w" in layer.params])


def main():
    train_data, test_data = synth_splits(0, classes=4, n_train=600,
                                         n_test=200, height=16, width=16)
    cfg = TrainConfig(epochs=10, batch_size=32, lr=0.02)

    print("== training a cnn-tiny on 600 synthetic 16x16 images ==")
    net = train_variants("cnn-tiny", train_data, cfg, [100])[0]
    base_acc = accuracy(net, test_data)
    print(f"test accuracy after {cfg.epochs} epochs: {base_acc:.1f}%")

    print("\n== magnitude pruning without any retraining ==")
    pruned = {}
    for ratio in (0.5, 0.8, 0.9):
        p, _ = magnitude_prune(net, PruneConfig(ratio=ratio))
        pruned[ratio] = p
        print(f"ratio {ratio}: sparsity {sparsity(p):.3f}, "
              f"raw accuracy {accuracy(p, test_data):.1f}%")

    nested = bool(np.all(zero_positions(pruned[0.8])[zero_positions(pruned[0.5])]))
    print(f"zeros at 0.5 are a subset of zeros at 0.8: {nested}")
    print("(larger ratios always extend the smaller zero set, so a pirate")
    print(" cannot dodge detection by picking an in-between ratio)")

    print("\n== short masked fine-tune at ratio 0.8 ==")
    suite = make_pruned_suite(net, train_data, [0.8], repeats=2, seed=7,
                              train_cfg=cfg, finetune_epochs=2,
                              eval_data=test_data)
    for pm in suite:
        print(f"repeat {pm.repeat}: sparsity {sparsity(pm.net):.3f}, "
              f"accuracy {pm.accuracy:.1f}% "
              f"(gap to base {abs(pm.accuracy - base_acc):.1f} pts)")
    print("fine-tuning runs with the mask pinned, so pruned weights stay zero")
    print("while the survivors absorb the lost capacity.")


if __name__ == "__main__":
    main()
