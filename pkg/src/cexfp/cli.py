"""Command line pipeline: train, prune, fingerprint, evaluate, and verify.

Every command reads one JSON config (defaults apply when none is given),
derives its stage seeds from the single master seed, and writes artifacts
plus a ``manifest-<command>.json`` listing their sha256 digests.  Nothing
embeds timestamps, so rerunning a command reproduces the files byte for
byte.

Exit codes: 0 on success (including an ownership claim), 1 for a rejected
claim or a failed trend check, 2 for any error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import render
from .config import (ExperimentConfig, config_hash, load_config, override,
                     save_config)
from .data import load_cifar10, synth_splits
from .errors import NotFoundError, ParameterError
from .evaluation import (ModelRegistry, build_report, report_from_json_dict,
                         trend_checks, verify_ownership)
from .fingerprint import FingerprintConfig, generate, load_set, save_set
from .nn import build_network, model_hash
from .pruning import SparsityMask, make_pruned_suite, PrunedModel
from .storage import (load_checkpoint, read_container, read_json,
                      save_checkpoint, write_json)
from .train import accuracy, train_variants
from .util import parallel_map, sha256_file

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_ERROR = 2

_KNOWN_ERRORS = (ParameterError, NotFoundError, OSError, ValueError,
                 RuntimeError, LookupError)


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = override(cfg, seed=args.seed)
    return cfg


def _prepare_out(args, cfg: ExperimentConfig) -> str:
    out = args.out
    os.makedirs(out, exist_ok=True)
    os.makedirs(os.path.join(out, "models"), exist_ok=True)
    save_config(os.path.join(out, "config.json"), cfg)
    return out


def _splits(cfg: ExperimentConfig):
    if cfg.dataset == "cifar10":
        return load_cifar10(cfg.data_path)
    return synth_splits(cfg.stage_seed("data"), classes=cfg.classes,
                        n_train=cfg.train_n, n_test=cfg.test_n,
                        height=cfg.height, width=cfg.width)


def _write_manifest(out: str, command: str, cfg: ExperimentConfig,
                    paths, extra: dict | None = None) -> None:
    files = {os.path.relpath(p, out).replace(os.sep, "/"): sha256_file(p)
             for p in sorted(paths)}
    manifest = {"command": command, "config_hash": config_hash(cfg),
                "files": files}
    if extra:
        manifest.update(extra)
    write_json(os.path.join(out, f"manifest-{command}.json"), manifest)


def _save_model(path: str, net, cfg: ExperimentConfig, command: str,
                role: str, acc: float, **more) -> None:
    extras = {"config_hash": config_hash(cfg), "command": command,
              "role": role, "accuracy": acc, "model_hash": model_hash(net)}
    extras.update(more)
    save_checkpoint(path, net, extras=extras)


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_out(args, cfg)
    train_data, test_data = _splits(cfg)
    written = [os.path.join(out, "config.json")]
    summary = {}

    def emit(name, role, net):
        acc = accuracy(net, test_data)
        path = os.path.join(out, "models", f"{name}.cxf")
        _save_model(path, net, cfg, "train", role, acc, arch=net.arch_id)
        written.append(path)
        summary[name] = {"accuracy": acc, "model_hash": model_hash(net)}
        print(f"trained {name} ({net.arch_id}): test accuracy {acc:.1f}%")

    base = train_variants(cfg.base_arch, train_data, cfg.train,
                          [cfg.stage_seed("base")])[0]
    emit("base", "base", base)
    if cfg.variant_count:
        variants = train_variants(cfg.base_arch, train_data, cfg.train,
                                  cfg.variant_seeds())
        for i, net in enumerate(variants):
            emit(f"variant{i}", "variant", net)
    if cfg.other_arch:
        other = train_variants(cfg.other_arch, train_data, cfg.train,
                               [cfg.stage_seed("other")])[0]
        emit("other", "other-arch", other)
    _write_manifest(out, "train", cfg, written, {"models": summary})
    return EXIT_OK


def _pruned_name(ratio, repeat) -> str:
    return f"pruned-r{ratio:g}-{repeat}"


def cmd_prune(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_out(args, cfg)
    base_path = args.model or os.path.join(out, "models", "base.cxf")
    net, _ = load_checkpoint(base_path)
    train_data, test_data = _splits(cfg)
    suite = make_pruned_suite(net, train_data, cfg.prune_ratios,
                              cfg.prune_repeats, cfg.stage_seed("prune-suite"),
                              train_cfg=cfg.train, scope=cfg.prune_scope,
                              finetune_epochs=cfg.finetune_epochs,
                              eval_data=test_data)
    written = [os.path.join(out, "config.json")]
    summary = {}
    for pm in suite:
        name = _pruned_name(pm.ratio, pm.repeat)
        path = os.path.join(out, "models", f"{name}.cxf")
        mask_arrays = {}
        for i, pname, arr in pm.net.param_items():
            if pname == "w":
                mask_arrays[f"mask.layer{i}.{pname}"] = (arr != 0).astype("uint8")
        extras = {"config_hash": config_hash(cfg), "command": "prune",
                  "role": "pruned", "accuracy": pm.accuracy,
                  "ratio": pm.ratio, "repeat": pm.repeat, "seed": pm.seed,
                  "scope": pm.scope, "base_hash": pm.base_hash,
                  "model_hash": model_hash(pm.net)}
        save_checkpoint(path, pm.net, extras=extras, extra_arrays=mask_arrays)
        written.append(path)
        summary[name] = {"accuracy": pm.accuracy, "ratio": pm.ratio,
                         "repeat": pm.repeat}
        print(f"pruned ratio {pm.ratio:g} repeat {pm.repeat}: "
              f"test accuracy {pm.accuracy:.1f}%")
    _write_manifest(out, "prune", cfg, written, {"models": summary})
    return EXIT_OK


def _load_pruned(path: str):
    """Checkpoint plus its embedded sparsity mask (None when absent)."""
    net, extras = load_checkpoint(path)
    _, arrays = read_container(path)
    tensors = [dict() for _ in net.layers]
    found = False
    for i, name, _arr in net.param_items():
        key = f"mask.layer{i}.{name}"
        if key in arrays:
            tensors[i][name] = arrays[key].astype(bool)
            found = True
    mask = SparsityMask(tensors) if found else None
    return net, extras, mask


def _cell_from_flags(cfg: ExperimentConfig, args):
    method = args.method
    delta = args.delta if args.delta is not None else (
        0.0 if method == "vanilla" else cfg.ltrc_delta)
    k = args.band_k if args.band_k is not None else (
        cfg.ks[0] if method == "ltrc" else 0)
    q = cfg.ltrc_q if method == "ltrc" else cfg.q
    # mirror the grid's cell names so the same parameters reproduce the
    # same set whether generated via the grid or via flags
    if method == "vanilla":
        name = "vanilla"
    elif method == "ltrc":
        name = f"ltrc-k{k}" if delta == cfg.ltrc_delta else f"ltrc-d{delta:g}-k{k}"
    else:
        name = f"{method}-d{delta:g}"
    fc = FingerprintConfig(
        method=method, delta=delta, q=q, k=int(k),
        alpha=args.alpha if args.alpha is not None else cfg.alpha,
        steps=args.steps if args.steps is not None else cfg.steps,
        eta=cfg.eta,
        count=args.examples if args.examples is not None else cfg.examples,
        seed=cfg.stage_seed("fingerprint", name))
    return name, fc


def _generate_cell(task):
    """Worker: load the base model, run one grid cell, write its artifacts."""
    model_path, name, fc, set_path, sheet_path, meta = task
    net, _ = load_checkpoint(model_path)
    fset = generate(net, fc)
    save_set(set_path, fset, extras=meta)
    render.contact_sheet(fset.images(), sheet_path,
                         meta={**meta, "cell": name})
    return name, fset.converged_count(), len(fset)


def cmd_fingerprint(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_out(args, cfg)
    model_path = args.model or os.path.join(out, "models", "base.cxf")
    os.makedirs(os.path.join(out, "sets"), exist_ok=True)
    os.makedirs(os.path.join(out, "sheets"), exist_ok=True)

    if args.method:
        cells = dict([_cell_from_flags(cfg, args)])
    else:
        cells = cfg.grid_cells()
        if args.examples is not None or args.steps is not None \
                or args.alpha is not None:
            fields = {k: v for k, v in (("count", args.examples),
                                        ("steps", args.steps),
                                        ("alpha", args.alpha))
                      if v is not None}
            cells = {n: replace(fc, **fields) for n, fc in cells.items()}

    meta = {"config_hash": config_hash(cfg), "command": "fingerprint"}
    tasks = []
    written = [os.path.join(out, "config.json")]
    for name, fc in cells.items():
        set_path = os.path.join(out, "sets", f"{name}.cxf")
        sheet_path = os.path.join(out, "sheets", f"{name}.png")
        tasks.append((model_path, name, fc, set_path, sheet_path, meta))
        written += [set_path, sheet_path]
    results = parallel_map(_generate_cell, tasks, jobs=args.jobs or 1)
    summary = {}
    for name, converged, total in results:
        summary[name] = {"converged": converged, "count": total}
        print(f"generated {name}: {converged}/{total} converged")
    _write_manifest(out, "fingerprint", cfg, written, {"sets": summary})
    return EXIT_OK


def _build_registry(out: str, cfg: ExperimentConfig) -> ModelRegistry:
    models_dir = os.path.join(out, "models")
    base, base_extras = load_checkpoint(os.path.join(models_dir, "base.cxf"))
    registry = ModelRegistry(base, base_accuracy=base_extras.get("accuracy"))
    names = sorted(os.listdir(models_dir))
    for fname in names:
        stem, ext = os.path.splitext(fname)
        if ext != ".cxf" or stem == "base":
            continue
        path = os.path.join(models_dir, fname)
        if stem.startswith("pruned-"):
            net, extras, _ = _load_pruned(path)
            registry.add_pruned(PrunedModel(
                net=net, ratio=float(extras["ratio"]),
                repeat=int(extras["repeat"]), seed=int(extras["seed"]),
                scope=extras.get("scope", cfg.prune_scope),
                accuracy=float(extras["accuracy"]),
                base_hash=extras.get("base_hash", "")))
        else:
            net, extras = load_checkpoint(path)
            group = ("other-arch" if extras.get("role") == "other-arch"
                     else "variants")
            registry.add_other(stem, net, group=group,
                               accuracy=extras.get("accuracy"))
    return registry


def _load_sets(out: str, cfg: ExperimentConfig) -> dict:
    sets_dir = os.path.join(out, "sets")
    if not os.path.isdir(sets_dir):
        raise NotFoundError(f"no fingerprint sets under {sets_dir}")
    on_disk = {os.path.splitext(f)[0]: os.path.join(sets_dir, f)
               for f in os.listdir(sets_dir) if f.endswith(".cxf")}
    ordered = [n for n in cfg.grid_cells() if n in on_disk]
    ordered += sorted(set(on_disk) - set(ordered))
    return {n: load_set(on_disk[n]) for n in ordered}


def _print_table(report) -> None:
    rows = report.table_rows()
    print(f"{'cell':<14} {'ratio':>5} {'robust':>6} {'transfer':>8} {'unique':>6}")
    for r in rows:
        print(f"{r['cell']:<14} {r['ratio']:>5g} {r['robustness']:>6d} "
              f"{r['transferability']:>8d} {r['uniqueness']:>+6d}")


def _render_report(report, out: str) -> list:
    paths = []

    def add(path):
        paths.append(path)
        return path

    write_json(add(os.path.join(out, "report.json")), report.to_json_dict())
    report.write_csv(add(os.path.join(out, "report.csv")))
    report.write_curves_csv(add(os.path.join(out, "curves.csv")))
    for ratio in report.ratios:
        points = {}
        for t, r, name in report.curve_points(ratio):
            method = report.cell(name).method
            points.setdefault(method, []).append((t, r))
        svg = os.path.join(out, f"scatter-r{ratio:g}.svg")
        if render.scatter_svg(points, svg, title=f"pruning ratio {ratio:g}"):
            paths.append(svg)
    return paths


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_out(args, cfg)
    registry = _build_registry(out, cfg)
    sets = _load_sets(out, cfg)
    echo = {"hash": config_hash(cfg), "config": cfg.to_dict()}
    report = build_report(sets, registry, config_echo=echo)
    paths = _render_report(report, out)
    _write_manifest(out, "evaluate", cfg,
                    paths + [os.path.join(out, "config.json")])
    _print_table(report)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.check_trends:
        failed = 0
        for check in trend_checks(report):
            tag = "ok" if check["passed"] else "FAIL"
            print(f"[{tag}] {check['name']}: {check['detail']}")
            failed += 0 if check["passed"] else 1
        if failed:
            print(f"{failed} trend check(s) failed", file=sys.stderr)
            return EXIT_REJECT
    return EXIT_OK


def cmd_saliency(args) -> int:
    from .frequency import band_mean_saliency, frequency_saliency

    cfg = _resolve_config(args)
    out = _prepare_out(args, cfg)
    model_path = args.model or os.path.join(out, "models", "base.cxf")
    net, _ = load_checkpoint(model_path)
    _, test_data = _splits(cfg)
    n = args.examples if args.examples is not None else 200
    n = min(n, len(test_data))
    sal = frequency_saliency(net, test_data.images, test_data.labels, n=n)
    k = args.band_k if args.band_k is not None else 4
    low, high = band_mean_saliency(sal, k)
    csv_path = os.path.join(out, "saliency.csv")
    png_path = os.path.join(out, "saliency.png")
    pgm_path = os.path.join(out, "saliency.pgm")
    json_path = os.path.join(out, "saliency.json")
    render.saliency_csv(sal, csv_path)
    render.saliency_png(sal, png_path,
                        meta={"config_hash": config_hash(cfg),
                              "command": "saliency"})
    render.save_pgm(sal.mean(axis=0), pgm_path)
    write_json(json_path, {"n": n, "k": k, "low_band_mean": low,
                           "high_band_mean": high,
                           "ratio": low / high if high else float("inf"),
                           "config_hash": config_hash(cfg)})
    _write_manifest(out, "saliency", cfg,
                    [csv_path, png_path, pgm_path, json_path,
                     os.path.join(out, "config.json")])
    print(f"saliency over {n} examples: low-band mean {low:.3e}, "
          f"high-band mean {high:.3e} (band edge k={k})")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _resolve_config(args)
    model_path = args.model or os.path.join(args.out, "models", "base.cxf")
    net, _ = load_checkpoint(model_path)
    fset = load_set(args.set)
    threshold = args.threshold if args.threshold is not None else cfg.threshold
    decision = verify_ownership(net, fset, threshold=threshold)
    print(f"{decision.decision} accuracy={decision.accuracy:.1f} "
          f"threshold={decision.threshold:g}")
    return EXIT_OK if decision.decision == "claim" else EXIT_REJECT


def cmd_report(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_out(args, cfg)
    path = os.path.join(out, "report.json")
    if not os.path.exists(path):
        raise NotFoundError(f"no report at {path}; run evaluate first")
    report = report_from_json_dict(read_json(path))
    paths = _render_report(report, out)
    _write_manifest(out, "report", cfg, paths)
    _print_table(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cexfp",
        description="Fingerprint small image classifiers with "
                    "characteristic examples.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", default="artifacts",
                       help="artifact directory (default: artifacts)")
        p.add_argument("--seed", type=int, help="override the master seed")
        return p

    common(sub.add_parser("train", help="train base, variant, and "
                                        "other-architecture models"))
    p = common(sub.add_parser("prune", help="build the pruned-model suite"))
    p.add_argument("--model", help="base checkpoint (default: out/models/base.cxf)")

    p = common(sub.add_parser("fingerprint",
                              help="generate characteristic-example sets"))
    p.add_argument("--model", help="target checkpoint (default: out/models/base.cxf)")
    p.add_argument("--method", choices=["vanilla", "rc", "rc-gm", "ltrc"],
                   help="generate a single cell instead of the whole grid")
    p.add_argument("--delta", type=float, help="weight perturbation radius")
    p.add_argument("--band-k", type=int, help="band edge for ltrc")
    p.add_argument("--steps", type=int, help="descent step budget")
    p.add_argument("--alpha", type=float, help="descent step size")
    p.add_argument("--examples", type=int, help="examples per set")
    p.add_argument("--jobs", type=int, help="parallel workers across cells")

    p = common(sub.add_parser("evaluate",
                              help="score sets against the model registry"))
    p.add_argument("--check-trends", action="store_true",
                   help="exit 1 unless the qualitative trends hold")

    p = common(sub.add_parser("saliency",
                              help="frequency saliency of a checkpoint"))
    p.add_argument("--model", help="checkpoint (default: out/models/base.cxf)")
    p.add_argument("--examples", type=int, help="test examples to average")
    p.add_argument("--band-k", type=int, help="band edge for the summary split")

    p = common(sub.add_parser("verify", help="ownership decision for a model"))
    p.add_argument("--set", required=True, help="fingerprint set file")
    p.add_argument("--model", help="checkpoint to test")
    p.add_argument("--threshold", type=float,
                   help="claim threshold in accuracy percent")

    common(sub.add_parser("report", help="re-render outputs from report.json"))
    return parser


_HANDLERS = {
    "train": cmd_train, "prune": cmd_prune, "fingerprint": cmd_fingerprint,
    "evaluate": cmd_evaluate, "saliency": cmd_saliency, "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except _KNOWN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
