"""Experiment config: validation, grid expansion, hashing, round trips."""

import os

import pytest

from cexfp.config import (ExperimentConfig, config_from_dict, config_hash,
                          load_config, override, save_config)
from cexfp.errors import ParameterError
from cexfp.train import TrainConfig


def test_defaults_build_the_full_grid():
    cfg = ExperimentConfig()
    cells = cfg.grid_cells()
    assert list(cells) == [
        "vanilla", "rc-d0.01", "rc-d0.03", "rc-d0.05",
        "rc-gm-d0.01", "rc-gm-d0.03", "rc-gm-d0.05",
        "ltrc-k2", "ltrc-k4", "ltrc-k6"]
    assert cells["vanilla"].method == "vanilla"
    assert cells["rc-d0.03"].delta == 0.03
    assert cells["rc-gm-d0.05"].q == cfg.q == 10
    ltrc = cells["ltrc-k4"]
    assert ltrc.k == 4 and ltrc.delta == cfg.ltrc_delta and ltrc.q == cfg.ltrc_q
    for cell in cells.values():
        assert cell.alpha == cfg.alpha
        assert cell.steps == cfg.steps == 500
        assert cell.eta == cfg.eta == 1e-6
        assert cell.count == cfg.examples == 100
    # every cell draws its own seed stream
    seeds = [c.seed for c in cells.values()]
    assert len(set(seeds)) == len(seeds)


def test_validation():
    with pytest.raises(ParameterError):
        ExperimentConfig(dataset="mnist")
    with pytest.raises(ParameterError):
        ExperimentConfig(dataset="cifar10")  # needs data_path
    ExperimentConfig(dataset="cifar10", data_path="/data")
    with pytest.raises(ParameterError):
        ExperimentConfig(methods=("vanilla", "fgsm"))
    with pytest.raises(ParameterError):
        ExperimentConfig(variant_count=-1)
    with pytest.raises(ParameterError):
        ExperimentConfig(prune_repeats=0)


def test_stage_seeds_are_stable_and_distinct():
    cfg = ExperimentConfig(seed=3)
    assert cfg.stage_seed("base") == ExperimentConfig(seed=3).stage_seed("base")
    assert cfg.stage_seed("base") != cfg.stage_seed("other")
    assert cfg.stage_seed("base") != ExperimentConfig(seed=4).stage_seed("base")
    seeds = cfg.variant_seeds()
    assert len(seeds) == cfg.variant_count
    assert len(set(seeds)) == len(seeds)


def test_hash_tracks_content():
    a = ExperimentConfig()
    b = ExperimentConfig()
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(ExperimentConfig(seed=1))
    assert config_hash(a) != config_hash(
        ExperimentConfig(train=TrainConfig(lr=0.005)))


def test_save_load_round_trip(tmp_path):
    cfg = ExperimentConfig(seed=11, prune_ratios=(0.5, 0.7), ks=(3,),
                           train=TrainConfig(epochs=4, lr=0.02))
    path = os.path.join(tmp_path, "cfg.json")
    save_config(path, cfg)
    back = load_config(path)
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)
    assert isinstance(back.train, TrainConfig)
    assert back.prune_ratios == (0.5, 0.7)


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ParameterError, match="unknown config fields"):
        config_from_dict({"seed": 1, "learning_rate": 0.1})


def test_override_drops_none():
    cfg = ExperimentConfig()
    assert override(cfg) is cfg
    assert override(cfg, seed=None, steps=None) is cfg
    changed = override(cfg, seed=None, steps=77)
    assert changed.steps == 77 and changed.seed == cfg.seed
