"""Scoring fingerprints: robustness, transferability, uniqueness, reports.

Uniqueness is stored as the literal float subtraction of the robustness and
transferability fields, never recomputed from rounded copies, so the report
identity ``uniqueness == robustness - transferability`` is bit-exact.  The
CSV table mirror rounds to integers and reconstructs its uniqueness column
from the rounded operands for the same reason.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, NotFoundError, ParameterError, ShapeMismatchError
from .fingerprint import FingerprintSet
from .nn import Network, forward, model_hash
from .pruning import PrunedModel


@dataclass
class RegisteredModel:
    name: str
    net: Network
    group: str
    accuracy: float | None = None  # test accuracy, when known


class ModelRegistry:
    """Base model plus its pruned derivatives and unrelated other models."""

    def __init__(self, base: Network, base_accuracy: float | None = None):
        self.base = base
        self.base_accuracy = base_accuracy
        self.pruned: list[PrunedModel] = []
        self.others: list[RegisteredModel] = []

    def add_pruned(self, pm: PrunedModel) -> None:
        self.pruned.append(pm)

    def add_pruned_suite(self, suite) -> None:
        for pm in suite:
            self.add_pruned(pm)

    def add_other(self, name: str, net: Network, group: str = "variants",
                  accuracy: float | None = None) -> None:
        self.others.append(RegisteredModel(name, net, group, accuracy))

    def ratios(self) -> list:
        return sorted({pm.ratio for pm in self.pruned})

    def pruned_at(self, ratio) -> list:
        return [pm for pm in self.pruned if pm.ratio == ratio]

    def groups(self) -> list:
        seen = []
        for m in self.others:
            if m.group not in seen:
                seen.append(m.group)
        return seen

    def others_in(self, group: str | None = None) -> list:
        if group is None:
            return list(self.others)
        return [m for m in self.others if m.group == group]


def fingerprint_accuracy(net: Network, fset: FingerprintSet) -> float:
    """Percentage of examples the model classifies as their target label."""
    if len(fset) == 0:
        raise EmptyInputError("fingerprint set is empty")
    images = fset.images()
    if images.shape[1:] != net.input_shape:
        raise ShapeMismatchError(
            f"set images {images.shape[1:]} do not fit net {net.input_shape}")
    preds = forward(net, images).argmax(axis=1)
    return 100.0 * float(np.mean(preds == fset.labels()))


def robustness(fset: FingerprintSet, registry: ModelRegistry, ratio) -> float:
    """Mean fingerprint accuracy over the pruned repeats at one ratio."""
    models = registry.pruned_at(ratio)
    if not models:
        raise NotFoundError(f"no pruned models at ratio {ratio}")
    return float(np.mean([fingerprint_accuracy(pm.net, fset) for pm in models]))


def transferability(fset: FingerprintSet, registry: ModelRegistry,
                    group: str | None = None) -> float:
    """Mean fingerprint accuracy over the other-model group (all by default)."""
    models = registry.others_in(group)
    if not models:
        raise NotFoundError(f"no other models in group {group!r}")
    return float(np.mean([fingerprint_accuracy(m.net, fset) for m in models]))


def uniqueness_score(robustness_pct: float, transferability_pct: float) -> float:
    """Signed difference in percentage points; negative means false-positive
    prone (the fingerprint matches unrelated models more than pruned ones)."""
    for v in (robustness_pct, transferability_pct):
        if not 0.0 <= v <= 100.0:
            raise ParameterError(f"percentage {v} outside [0, 100]")
    return robustness_pct - transferability_pct


@dataclass
class OwnershipDecision:
    decision: str  # "claim" | "reject"
    accuracy: float
    threshold: float


def verify_ownership(net: Network, fset: FingerprintSet,
                     threshold: float = 50.0) -> OwnershipDecision:
    """Claim ownership iff the fingerprint accuracy reaches the threshold."""
    if not 0.0 < threshold <= 100.0:
        raise ParameterError(f"threshold must lie in (0, 100], got {threshold}")
    acc = fingerprint_accuracy(net, fset)
    return OwnershipDecision("claim" if acc >= threshold else "reject",
                             acc, float(threshold))


@dataclass
class ReportCell:
    name: str
    method: str
    delta: float
    q: int
    k: int
    base_accuracy: float
    per_model: dict = field(default_factory=dict)    # model name -> accuracy
    robustness: dict = field(default_factory=dict)   # ratio key -> accuracy
    transferability: dict = field(default_factory=dict)  # group -> accuracy
    uniqueness: dict = field(default_factory=dict)   # ratio key -> group -> r-t


ALL_GROUP = "all"


def _ratio_key(ratio) -> str:
    return f"{ratio:g}"


@dataclass
class EvaluationReport:
    cells: list
    ratios: list
    groups: list
    models: dict
    base_hash: str
    config_echo: dict | None = None
    warnings: list = field(default_factory=list)

    def cell(self, name: str) -> ReportCell:
        for c in self.cells:
            if c.name == name:
                return c
        raise NotFoundError(f"no report cell named {name!r}")

    def best_cell(self, ratio, method: str | None = None,
                  group: str = ALL_GROUP) -> ReportCell:
        """Cell with the highest uniqueness at a ratio (optionally per method)."""
        key = _ratio_key(ratio)
        pool = [c for c in self.cells if method is None or c.method == method]
        pool = [c for c in pool if key in c.uniqueness]
        if not pool:
            raise NotFoundError(f"no cells for method={method!r} at ratio {ratio}")
        return max(pool, key=lambda c: c.uniqueness[key][group])

    def to_json_dict(self) -> dict:
        return {
            "base_hash": self.base_hash,
            "ratios": [float(r) for r in self.ratios],
            "groups": self.groups,
            "models": self.models,
            "config": self.config_echo,
            "warnings": self.warnings,
            "cells": [{
                "name": c.name, "method": c.method, "delta": c.delta,
                "q": c.q, "k": c.k, "base_accuracy": c.base_accuracy,
                "per_model": c.per_model, "robustness": c.robustness,
                "transferability": c.transferability,
                "uniqueness": c.uniqueness,
            } for c in self.cells],
        }

    def table_rows(self) -> list:
        """Integer table mirror; uniqueness reconstructed from the rounded
        operands so each printed row sums exactly."""
        rows = []
        for c in self.cells:
            for ratio in self.ratios:
                key = _ratio_key(ratio)
                r = int(round(c.robustness[key]))
                t = int(round(c.transferability[ALL_GROUP]))
                rows.append({
                    "cell": c.name, "method": c.method, "delta": c.delta,
                    "q": c.q, "k": c.k, "ratio": ratio,
                    "robustness": r, "transferability": t, "uniqueness": r - t,
                })
        return rows

    def write_csv(self, path: str) -> None:
        rows = self.table_rows()
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
            w.writeheader()
            w.writerows(rows)

    def curve_points(self, ratio) -> list:
        """(transferability, robustness, cell name) tuples at one ratio."""
        key = _ratio_key(ratio)
        return [(c.transferability[ALL_GROUP], c.robustness[key], c.name)
                for c in self.cells]

    def write_curves_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["ratio", "cell", "transferability", "robustness"])
            for ratio in self.ratios:
                for t, r, name in self.curve_points(ratio):
                    w.writerow([f"{ratio:g}", name, repr(t), repr(r)])


def build_report(sets, registry: ModelRegistry,
                 config_echo: dict | None = None) -> EvaluationReport:
    """Evaluate every named fingerprint set against the whole registry.

    ``sets`` maps cell names to sets (insertion order is kept).  A set whose
    recorded base hash differs from the registry's base model produces a
    warning entry, not an error.
    """
    if not sets or not registry.pruned and not registry.others:
        raise EmptyInputError("need fingerprint sets and a populated registry")
    base_hash = model_hash(registry.base)
    ratios = registry.ratios()
    groups = registry.groups()
    warns = []
    models = {"base": {"group": "base", "accuracy": registry.base_accuracy}}
    for pm in registry.pruned:
        models[f"pruned@{_ratio_key(pm.ratio)}#{pm.repeat}"] = {
            "group": "pruned", "ratio": pm.ratio, "repeat": pm.repeat,
            "accuracy": pm.accuracy}
    for m in registry.others:
        models[m.name] = {"group": m.group, "accuracy": m.accuracy}

    cells = []
    for name, fset in sets.items():
        if fset.base_hash != base_hash:
            msg = (f"set {name!r} was generated against base "
                   f"{fset.base_hash[:12]}, registry base is {base_hash[:12]}")
            warnings.warn(msg)
            warns.append(msg)
        cfg = fset.config
        cell = ReportCell(name=name, method=cfg.method, delta=cfg.eff_delta,
                          q=cfg.eff_q, k=cfg.eff_k,
                          base_accuracy=fingerprint_accuracy(registry.base, fset))
        cell.per_model["base"] = cell.base_accuracy
        for pm in registry.pruned:
            cell.per_model[f"pruned@{_ratio_key(pm.ratio)}#{pm.repeat}"] = \
                fingerprint_accuracy(pm.net, fset)
        for m in registry.others:
            cell.per_model[m.name] = fingerprint_accuracy(m.net, fset)
        for ratio in ratios:
            cell.robustness[_ratio_key(ratio)] = robustness(fset, registry, ratio)
        for group in groups:
            cell.transferability[group] = transferability(fset, registry, group)
        cell.transferability[ALL_GROUP] = transferability(fset, registry)
        for ratio in ratios:
            key = _ratio_key(ratio)
            cell.uniqueness[key] = {
                g: cell.robustness[key] - cell.transferability[g]
                for g in groups + [ALL_GROUP]}
        cells.append(cell)
    return EvaluationReport(cells=cells, ratios=ratios, groups=groups,
                            models=models, base_hash=base_hash,
                            config_echo=config_echo, warnings=warns)


def report_from_json_dict(d: dict) -> EvaluationReport:
    """Rebuild a report from its to_json_dict form (for re-rendering)."""
    cells = [ReportCell(name=c["name"], method=c["method"], delta=c["delta"],
                        q=c["q"], k=c["k"], base_accuracy=c["base_accuracy"],
                        per_model=c["per_model"], robustness=c["robustness"],
                        transferability=c["transferability"],
                        uniqueness=c["uniqueness"])
             for c in d["cells"]]
    return EvaluationReport(cells=cells, ratios=d["ratios"], groups=d["groups"],
                            models=d["models"], base_hash=d["base_hash"],
                            config_echo=d.get("config"),
                            warnings=d.get("warnings", []))


def trend_checks(report: EvaluationReport, group: str = ALL_GROUP,
                 margin: float = 10.0, gm_ratio=0.8,
                 max_inversions: int = 1) -> list:
    """Qualitative checks on a finished report; each entry has name/passed/detail.

    1. At every pruning ratio, band-limited generation at its best band edge
       beats the vanilla uniqueness score by more than ``margin`` points.
    2. At ``gm_ratio`` (or the smallest available ratio), gradient-mean
       smoothing at its best perturbation radius scores at least as high as
       plain perturbed generation at that same radius.
    3. For each perturbed method, transferability is non-decreasing in the
       radius, allowing at most ``max_inversions`` inversions.
    """
    checks = []

    def uniq(cell, ratio):
        return cell.uniqueness[_ratio_key(ratio)][group]

    vanilla = [c for c in report.cells if c.method == "vanilla"]
    band = [c for c in report.cells if c.method == "ltrc"]
    if vanilla and band:
        for ratio in report.ratios:
            best = max(uniq(c, ratio) for c in band)
            van = max(uniq(c, ratio) for c in vanilla)
            ok = best > van + margin
            checks.append({
                "name": f"band-beats-vanilla@{_ratio_key(ratio)}",
                "passed": bool(ok),
                "detail": f"best ltrc {best:.1f} vs vanilla {van:.1f} "
                          f"(need > +{margin:g})"})

    rc = {c.delta: c for c in report.cells if c.method == "rc"}
    gm = {c.delta: c for c in report.cells if c.method == "rc-gm"}
    shared = sorted(set(rc) & set(gm))
    if shared:
        ratio = gm_ratio if any(_ratio_key(r) == _ratio_key(gm_ratio)
                                for r in report.ratios) else min(report.ratios)
        best_d = max(shared, key=lambda d: uniq(gm[d], ratio))
        gm_u = uniq(gm[best_d], ratio)
        rc_u = uniq(rc[best_d], ratio)
        checks.append({
            "name": f"gradient-mean-not-worse@{_ratio_key(ratio)}",
            "passed": bool(gm_u >= rc_u),
            "detail": f"rc-gm {gm_u:.1f} vs rc {rc_u:.1f} at delta {best_d:g}"})

    for method, cells in (("rc", rc), ("rc-gm", gm)):
        if len(cells) < 2:
            continue
        seq = [cells[d].transferability[group] for d in sorted(cells)]
        inversions = sum(1 for a, b in zip(seq, seq[1:]) if b < a - 1e-9)
        checks.append({
            "name": f"transferability-monotone-{method}",
            "passed": bool(inversions <= max_inversions),
            "detail": f"{inversions} inversions in {[round(v, 1) for v in seq]} "
                      f"(allow {max_inversions})"})
    return checks
