"""Fingerprinting image classifiers with characteristic examples.

The package trains small convolutional classifiers, derives pruned suspect
copies, generates characteristic examples by projected gradient descent, and
scores how well those examples separate a model's own lineage from unrelated
models.
"""

__version__ = "0.1.0"

from .config import (
    ExperimentConfig,
    config_hash,
    load_config,
    save_config,
)
from .data import (
    Dataset,
    load_cifar10,
    synth_dataset,
    synth_splits,
)
from .evaluation import (
    EvaluationReport,
    ModelRegistry,
    OwnershipDecision,
    build_report,
    fingerprint_accuracy,
    robustness,
    transferability,
    trend_checks,
    uniqueness_score,
    verify_ownership,
)
from .fingerprint import (
    CExample,
    FingerprintConfig,
    FingerprintSet,
    band_magnitudes,
    effective_gradient,
    generate,
    load_set,
    ltrc_step,
    pgd_step,
    random_start,
    save_set,
)
from .frequency import (
    HighPassMask,
    apply_highpass,
    band_mean_saliency,
    dct2,
    frequency_saliency,
    idct2,
    make_highpass_mask,
    omega_gradient,
)
from .nn import (
    Network,
    WeightPerturbation,
    apply_perturbation,
    architecture_ids,
    batch_input_gradient,
    batch_loss,
    build_network,
    cross_entropy_loss,
    forward,
    input_gradient,
    model_hash,
    param_gradient,
    sample_perturbation,
)
from .pruning import (
    PruneConfig,
    PrunedModel,
    SparsityMask,
    finetune_pruned,
    magnitude_prune,
    make_pruned_suite,
    sparsity,
)
from .storage import (
    load_checkpoint,
    read_container,
    save_checkpoint,
    write_container,
)
from .train import (
    TrainConfig,
    accuracy,
    train,
    train_variants,
)
from .util import derive_seed, make_rng

__all__ = [
    "CExample",
    "Dataset",
    "EvaluationReport",
    "ExperimentConfig",
    "FingerprintConfig",
    "FingerprintSet",
    "HighPassMask",
    "ModelRegistry",
    "Network",
    "OwnershipDecision",
    "PruneConfig",
    "PrunedModel",
    "SparsityMask",
    "TrainConfig",
    "WeightPerturbation",
    "accuracy",
    "apply_highpass",
    "apply_perturbation",
    "architecture_ids",
    "band_magnitudes",
    "band_mean_saliency",
    "batch_input_gradient",
    "batch_loss",
    "build_network",
    "build_report",
    "config_hash",
    "cross_entropy_loss",
    "dct2",
    "derive_seed",
    "effective_gradient",
    "fingerprint_accuracy",
    "finetune_pruned",
    "forward",
    "frequency_saliency",
    "generate",
    "idct2",
    "input_gradient",
    "load_cifar10",
    "load_checkpoint",
    "load_config",
    "load_set",
    "ltrc_step",
    "magnitude_prune",
    "make_highpass_mask",
    "make_pruned_suite",
    "make_rng",
    "model_hash",
    "omega_gradient",
    "param_gradient",
    "pgd_step",
    "random_start",
    "read_container",
    "robustness",
    "sample_perturbation",
    "save_checkpoint",
    "save_config",
    "save_set",
    "sparsity",
    "synth_dataset",
    "synth_splits",
    "train",
    "train_variants",
    "transferability",
    "trend_checks",
    "uniqueness_score",
    "verify_ownership",
    "write_container",
]
