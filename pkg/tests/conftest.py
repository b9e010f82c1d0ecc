"""Shared fixtures, including the session-scoped desk-scale experiment.

The desk experiment is the one world the acceptance tests score: a trained
base classifier, five same-architecture seed variants, one wider-architecture
model, a fine-tuned pruned suite at ratios 0.8 and 0.9, and the full default
generation grid evaluated into a report.  Building it takes a few minutes,
so it runs at most once per session and records per-stage wall times for the
runtime budgets.
"""

import time

import pytest

from cexfp.data import synth_splits
from cexfp.evaluation import ModelRegistry, build_report
from cexfp.fingerprint import FingerprintConfig, generate
from cexfp.pruning import make_pruned_suite
from cexfp.train import TrainConfig, accuracy, train_variants

DATA_SEED = 0
BASE_SEED = 100
VARIANT_SEEDS = (101, 102, 103, 104, 105)
WIDE_SEED = 200
SUITE_SEED = 7
SET_SEED = 11
RATIOS = (0.8, 0.9)
REPEATS = 5
TRAIN_CFG = TrainConfig(epochs=10, batch_size=64, lr=0.01, momentum=0.9)

GRID = {
    "vanilla": dict(method="vanilla"),
    "rc-d0.01": dict(method="rc", delta=0.01),
    "rc-d0.03": dict(method="rc", delta=0.03),
    "rc-d0.05": dict(method="rc", delta=0.05),
    "rc-gm-d0.01": dict(method="rc-gm", delta=0.01, q=10),
    "rc-gm-d0.03": dict(method="rc-gm", delta=0.03, q=10),
    "rc-gm-d0.05": dict(method="rc-gm", delta=0.05, q=10),
    "ltrc-k2": dict(method="ltrc", delta=0.01, q=1, k=2),
    "ltrc-k4": dict(method="ltrc", delta=0.01, q=1, k=4),
    "ltrc-k6": dict(method="ltrc", delta=0.01, q=1, k=6),
}


def build_desk():
    """Train, prune, fingerprint, and score the desk-scale experiment."""
    timings = {}
    train_data, test_data = synth_splits(DATA_SEED)

    t0 = time.perf_counter()
    base = train_variants("cnn-small", train_data, TRAIN_CFG, [BASE_SEED])[0]
    variants = train_variants("cnn-small", train_data, TRAIN_CFG,
                              list(VARIANT_SEEDS))
    wide = train_variants("cnn-wide", train_data, TRAIN_CFG, [WIDE_SEED])[0]
    timings["train"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    suite = make_pruned_suite(base, train_data, RATIOS, REPEATS, SUITE_SEED,
                              train_cfg=TRAIN_CFG, finetune_epochs=3,
                              eval_data=test_data)
    timings["suite"] = time.perf_counter() - t0

    registry = ModelRegistry(base, base_accuracy=accuracy(base, test_data))
    registry.add_pruned_suite(suite)
    for i, net in enumerate(variants):
        registry.add_other(f"variant{i}", net, group="variants",
                           accuracy=accuracy(net, test_data))
    registry.add_other("wide", wide, group="other-arch",
                       accuracy=accuracy(wide, test_data))

    t0 = time.perf_counter()
    sets = {name: generate(base, FingerprintConfig(count=100, seed=SET_SEED,
                                                   **kw))
            for name, kw in GRID.items()}
    timings["sets"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report = build_report(sets, registry)
    timings["report"] = time.perf_counter() - t0

    return {
        "train_data": train_data,
        "test_data": test_data,
        "base": base,
        "variants": variants,
        "wide": wide,
        "suite": suite,
        "registry": registry,
        "sets": sets,
        "report": report,
        "timings": timings,
    }


@pytest.fixture(scope="session")
def desk():
    return build_desk()


@pytest.fixture
def announce(capfd):
    """Print one uncaptured pass/fail line, then assert."""

    def _announce(number: int, name: str, ok: bool, detail: str = ""):
        line = (f"[criterion {number}] {'PASS' if ok else 'FAIL'} "
                f"{name}: {detail}")
        with capfd.disabled():
            print(line, flush=True)
        assert ok, line

    return _announce
