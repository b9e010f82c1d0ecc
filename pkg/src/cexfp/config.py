"""Experiment configuration: one JSON file drives the whole pipeline.

Stage seeds are derived from the single master seed with labeled tags, so
any stage can be rerun in isolation and still line up with a full run.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, replace

from .errors import ParameterError
from .fingerprint import METHODS, FingerprintConfig
from .storage import canonical_json, read_json, write_json
from .train import TrainConfig
from .util import derive_seed


@dataclass(frozen=True)
class ExperimentConfig:
    # data
    dataset: str = "synthetic"          # "synthetic" | "cifar10"
    data_path: str | None = None        # directory of cifar10 binary batches
    classes: int = 10
    train_n: int = 2000
    test_n: int = 1000
    height: int = 32
    width: int = 32
    # models
    base_arch: str = "cnn-small"
    other_arch: str = "cnn-wide"
    variant_count: int = 5
    train: TrainConfig = field(default_factory=TrainConfig)
    # pruning
    prune_ratios: tuple = (0.8, 0.9)
    prune_repeats: int = 5
    prune_scope: str = "per-layer"
    finetune_epochs: int = 3
    # fingerprint grid
    methods: tuple = ("vanilla", "rc", "rc-gm", "ltrc")
    deltas: tuple = (0.01, 0.03, 0.05)  # rc / rc-gm grid
    ltrc_delta: float = 0.01
    ks: tuple = (2, 4, 6)               # ltrc band-edge grid
    q: int = 10
    ltrc_q: int = 1
    alpha: float = 1.0 / 255.0
    steps: int = 500
    eta: float = 1e-6
    examples: int = 100
    # misc
    seed: int = 0
    threshold: float = 50.0

    def __post_init__(self):
        if self.dataset not in ("synthetic", "cifar10"):
            raise ParameterError("dataset must be 'synthetic' or 'cifar10'")
        if self.dataset == "cifar10" and not self.data_path:
            raise ParameterError("cifar10 dataset needs data_path")
        for m in self.methods:
            if m not in METHODS:
                raise ParameterError(f"unknown method {m!r}")
        if self.variant_count < 0 or self.prune_repeats < 1:
            raise ParameterError("bad variant or repeat count")

    def stage_seed(self, *tags) -> int:
        return derive_seed(self.seed, *tags)

    def variant_seeds(self) -> list:
        return [self.stage_seed("variant", i) for i in range(self.variant_count)]

    def grid_cells(self) -> dict:
        """Ordered map of cell name -> FingerprintConfig for the full grid."""
        cells = {}

        def add(name, **kw):
            cells[name] = FingerprintConfig(
                alpha=self.alpha, steps=self.steps, eta=self.eta,
                count=self.examples, seed=self.stage_seed("fingerprint", name),
                **kw)

        for method in self.methods:
            if method == "vanilla":
                add("vanilla", method="vanilla")
            elif method == "rc":
                for d in self.deltas:
                    add(f"rc-d{d:g}", method="rc", delta=d)
            elif method == "rc-gm":
                for d in self.deltas:
                    add(f"rc-gm-d{d:g}", method="rc-gm", delta=d, q=self.q)
            elif method == "ltrc":
                for k in self.ks:
                    add(f"ltrc-k{k}", method="ltrc", delta=self.ltrc_delta,
                        q=self.ltrc_q, k=int(k))
        return cells

    def to_dict(self) -> dict:
        d = asdict(self)
        d["prune_ratios"] = list(self.prune_ratios)
        d["methods"] = list(self.methods)
        d["deltas"] = list(self.deltas)
        d["ks"] = list(self.ks)
        return d


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.to_dict())).hexdigest()


def save_config(path: str, cfg: ExperimentConfig) -> None:
    write_json(path, cfg.to_dict())


def load_config(path: str) -> ExperimentConfig:
    return config_from_dict(read_json(path))


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    if "train" in d and isinstance(d["train"], dict):
        d["train"] = TrainConfig(**d["train"])
    for key in ("prune_ratios", "methods", "deltas", "ks"):
        if key in d:
            d[key] = tuple(d[key])
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ParameterError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(**d)


def override(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Replace fields, dropping None values (CLI flag plumbing)."""
    clean = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **clean) if clean else cfg
