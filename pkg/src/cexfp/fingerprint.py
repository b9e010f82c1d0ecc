"""Fingerprint generation: signed-gradient descent to eta-optimal examples.

Four flavors share one loop.  ``vanilla`` follows the clean model gradient;
``rc`` follows the gradient of a freshly weight-perturbed copy each step;
``rc-gm`` averages gradients over q fresh perturbations per step; ``ltrc``
additionally projects every step through a DCT high-pass filter so the
emitted images carry no low-band content.

Perturbation draws are derived from (config seed, step index, sample index)
and shared by every example in the set.  Trajectories therefore depend only
on the config, which keeps generation batched across examples, bit-
deterministic, and independent of how work is scheduled.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import CorruptFileError, ParameterError
from .frequency import HighPassMask, apply_highpass, dct2, make_highpass_mask
from .nn import (
    Network,
    apply_perturbation,
    batch_input_gradient,
    batch_loss,
    input_gradient,
    model_hash,
    sample_perturbation,
)
from .storage import read_container, write_container
from .util import DTYPE, derive_seed, make_rng

METHODS = ("vanilla", "rc", "rc-gm", "ltrc")

# emitted LTRC images are settled until they exceed [0,1] by at most this
_SETTLE_TOL = 1e-9
_SETTLE_ROUNDS = 100


@dataclass(frozen=True)
class FingerprintConfig:
    """Generation settings; fields irrelevant to ``method`` are ignored.

    ``delta`` bounds the uniform weight noise (rc / rc-gm / ltrc), ``q``
    counts gradient samples per step (rc-gm), ``k`` is the high-pass band
    edge (ltrc).  ``steps`` caps the iteration count and ``eta`` is the
    loss level that defines membership in the fingerprint set.
    """

    method: str = "vanilla"
    delta: float = 0.0
    q: int = 10
    k: int = 0
    alpha: float = 1.0 / 255.0
    steps: int = 500
    eta: float = 1e-6
    count: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}")
        if self.delta < 0:
            raise ParameterError("delta must be >= 0")
        if self.q < 1:
            raise ParameterError("q must be >= 1")
        if self.k < 0:
            raise ParameterError("k must be >= 0")
        if self.alpha < 0:
            raise ParameterError("alpha must be >= 0")
        if self.steps < 1:
            raise ParameterError("steps must be >= 1")
        if self.eta <= 0:
            raise ParameterError("eta must be > 0")
        if self.count < 1:
            raise ParameterError("count must be >= 1")

    @property
    def eff_delta(self) -> float:
        return 0.0 if self.method == "vanilla" else self.delta

    @property
    def eff_q(self) -> int:
        return self.q if self.method in ("rc-gm", "ltrc") else 1

    @property
    def eff_k(self) -> int:
        return self.k if self.method == "ltrc" else 0


@dataclass
class CExample:
    """One fingerprint example plus its generation record."""

    image: np.ndarray
    label: int
    converged: bool
    final_loss: float
    steps: int
    config: FingerprintConfig
    base_hash: str


@dataclass
class FingerprintSet:
    examples: list
    config: FingerprintConfig
    base_hash: str
    base_arch: str
    classes: int
    created: str | None = None

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def images(self) -> np.ndarray:
        return np.stack([e.image for e in self.examples])

    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.examples], dtype=np.int64)

    def converged_count(self) -> int:
        return sum(1 for e in self.examples if e.converged)


def random_start(seed, shape) -> np.ndarray:
    """I.i.d. uniform [0,1] image, deterministic per seed."""
    return make_rng(seed).uniform(0.0, 1.0, tuple(shape)).astype(DTYPE)


def effective_gradient(net: Network, x: np.ndarray, label: int,
                       cfg: FingerprintConfig, rng) -> np.ndarray:
    """Input gradient under the method's weight-noise model (one example).

    With ``delta`` of zero every method reduces to the clean-model gradient.
    ``rc`` draws one fresh perturbation, ``rc-gm``/``ltrc`` average over
    ``q`` draws; ``rng`` advances by exactly the draws consumed.
    """
    if cfg.eff_delta == 0.0:
        return input_gradient(net, x, label)
    rng = make_rng(rng)
    total = np.zeros_like(np.asarray(x, dtype=DTYPE))
    for _ in range(cfg.eff_q):
        bumped = apply_perturbation(net, sample_perturbation(net, cfg.eff_delta, rng))
        total += input_gradient(bumped, x, label)
    return total / cfg.eff_q


def pgd_step(x: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    """Signed-gradient descent step projected onto the pixel box [0,1]."""
    return np.clip(x - alpha * np.sign(g), 0.0, 1.0)


def ltrc_step(x: np.ndarray, g: np.ndarray, alpha: float, k) -> np.ndarray:
    """PGD step followed by the high-pass projection (filter outermost).

    The filter can push pixels slightly outside [0,1]; no re-clip happens
    here because the next step's box projection handles it.
    """
    if isinstance(k, HighPassMask):
        mask = k
    else:
        mask = make_highpass_mask(x.shape[-2], x.shape[-1], int(k))
    return apply_highpass(pgd_step(x, g, alpha), mask)


def _batched_gradient(net: Network, x: np.ndarray, labels, cfg, step: int):
    """Effective gradient for a batch, sharing the step's perturbation draws."""
    if cfg.eff_delta == 0.0:
        _, dx = batch_input_gradient(net, x, labels)
        return dx
    total = np.zeros_like(x)
    for s in range(cfg.eff_q):
        rng = make_rng(derive_seed(cfg.seed, "delta", step, s))
        bumped = apply_perturbation(net, sample_perturbation(net, cfg.eff_delta, rng))
        _, dx = batch_input_gradient(bumped, x, labels)
        total += dx
    return total / cfg.eff_q


def _settle_band(x: np.ndarray, mask: HighPassMask) -> np.ndarray:
    """Alternate box and band projections until both nearly hold, then clip.

    The final exact clip moves pixels by at most the residual overshoot, so
    the reintroduced band magnitudes stay orders of magnitude below the
    1e-6 purity bound.
    """
    for _ in range(_SETTLE_ROUNDS):
        overshoot = max(float(x.max()) - 1.0, -float(x.min()), 0.0)
        if overshoot <= _SETTLE_TOL:
            break
        x = apply_highpass(np.clip(x, 0.0, 1.0), mask)
    return np.clip(x, 0.0, 1.0)


def generate(net: Network, cfg: FingerprintConfig) -> FingerprintSet:
    """Generate the fingerprint set for ``net`` under ``cfg``.

    Every example starts from its own seeded uniform image with a target
    label drawn uniformly over the classes.  Iteration stops early once the
    base-model loss drops below ``eta``; stragglers are kept but flagged.
    """
    shape = net.input_shape
    p = cfg.count
    x = np.stack([random_start(derive_seed(cfg.seed, "start", i), shape)
                  for i in range(p)])
    labels = make_rng(derive_seed(cfg.seed, "labels")).integers(
        0, net.classes, size=p).astype(np.int64)
    mask = None
    if cfg.method == "ltrc" and cfg.eff_k > 0:
        mask = make_highpass_mask(shape[-2], shape[-1], cfg.eff_k)

    active = np.ones(p, dtype=bool)
    steps_used = np.full(p, cfg.steps, dtype=np.int64)
    final_loss = np.full(p, np.inf)
    converged = np.zeros(p, dtype=bool)

    for t in range(cfg.steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        losses = batch_loss(net, x[idx], labels[idx])
        final_loss[idx] = losses
        hit = losses < cfg.eta
        if hit.any():
            converged[idx[hit]] = True
            steps_used[idx[hit]] = t
            active[idx[hit]] = False
            idx = idx[~hit]
        if t == cfg.steps or idx.size == 0:
            continue
        g = _batched_gradient(net, x[idx], labels[idx], cfg, t)
        stepped = pgd_step(x[idx], g, cfg.alpha)
        if mask is not None:
            stepped = apply_highpass(stepped, mask)
        x[idx] = stepped

    if mask is not None:
        x = _settle_band(x, mask)
        final_loss = batch_loss(net, x, labels)
        converged = converged | (final_loss < cfg.eta)
    base = model_hash(net)
    examples = [CExample(image=x[i], label=int(labels[i]),
                         converged=bool(converged[i]),
                         final_loss=float(final_loss[i]),
                         steps=int(steps_used[i]), config=cfg, base_hash=base)
                for i in range(p)]
    return FingerprintSet(examples=examples, config=cfg, base_hash=base,
                          base_arch=net.arch_id, classes=net.classes)


def band_magnitudes(set_or_image, k: int) -> float:
    """Largest per-channel DCT magnitude inside the masked band."""
    if isinstance(set_or_image, FingerprintSet):
        imgs = set_or_image.images()
    else:
        imgs = np.asarray(set_or_image)[None]
    h, w = imgs.shape[-2:]
    mask = make_highpass_mask(h, w, k)
    band = mask.values == 0.0
    if not band.any():
        return 0.0
    return float(np.abs(dct2(imgs))[..., band].max())


def save_set(path: str, fset: FingerprintSet,
             extras: dict | None = None) -> None:
    header = {
        "kind": "fingerprint-set",
        "config": asdict(fset.config),
        "base_hash": fset.base_hash,
        "base_arch": fset.base_arch,
        "classes": fset.classes,
        "created": fset.created,
    }
    if extras:
        header["extras"] = extras
    arrays = {
        "images": fset.images().astype(DTYPE),
        "labels": fset.labels(),
        "final_losses": np.array([e.final_loss for e in fset], dtype=DTYPE),
        "steps": np.array([e.steps for e in fset], dtype=np.int64),
        "converged": np.array([e.converged for e in fset], dtype=np.uint8),
    }
    write_container(path, header, arrays)


def load_set(path: str) -> FingerprintSet:
    header, arrays = read_container(path)
    if header.get("kind") != "fingerprint-set":
        raise CorruptFileError(f"{path}: not a fingerprint set "
                               f"(kind={header.get('kind')!r})")
    cfg = FingerprintConfig(**header["config"])
    base = header["base_hash"]
    examples = [CExample(image=arrays["images"][i],
                         label=int(arrays["labels"][i]),
                         converged=bool(arrays["converged"][i]),
                         final_loss=float(arrays["final_losses"][i]),
                         steps=int(arrays["steps"][i]),
                         config=cfg, base_hash=base)
                for i in range(arrays["images"].shape[0])]
    return FingerprintSet(examples=examples, config=cfg, base_hash=base,
                          base_arch=header["base_arch"],
                          classes=header["classes"],
                          created=header.get("created"))
