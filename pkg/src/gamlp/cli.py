"""Command-line pipeline driver.

Subcommands: preprocess, train, eval, sweep, ablate, export-attention.
Thread-count control (--threads, or the GAMLP_THREADS environment
variable) must take effect before the numerics libraries load, so the
heavy imports happen inside the handlers.
"""

from __future__ import annotations

import argparse
import os
import sys


def _set_threads(argv) -> None:
    threads = os.environ.get("GAMLP_THREADS")
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            threads = argv[i + 1]
        elif arg.startswith("--threads="):
            threads = arg.split("=", 1)[1]
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
            os.environ[var] = str(threads)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamlp",
        description="Precomputed graph propagation + node-adaptive attention classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="key = value config file")
        p.add_argument("--cache-dir", default=None, help="override the config cache_dir")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (overrides GAMLP_THREADS)")

    p = sub.add_parser("preprocess", help="build and persist the propagation caches")
    common(p)

    p = sub.add_parser("train", help="fit the model from the caches")
    common(p)
    p.add_argument("--checkpoint", default=None, help="checkpoint output path")
    p.add_argument("--out", default=None, help="training-log JSONL path")
    p.add_argument("--force", action="store_true",
                   help="use caches even if their fingerprint mismatches")

    p = sub.add_parser("eval", help="report split accuracies for a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("sweep", help="depth / edge-sparsity / label-sparsity sweeps")
    common(p)
    p.add_argument("--kind", required=True, choices=["depth", "edge", "label"])
    p.add_argument("--levels", required=True,
                   help="comma-separated levels (depths, fractions or label counts)")
    p.add_argument("--methods", default="gamlp_jk,sgc",
                   help="comma-separated method names")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--out", default="report", help="report path prefix")

    p = sub.add_parser("ablate", help="run one ablation family")
    common(p)
    p.add_argument("--which", required=True,
                   choices=["label_use", "reference_vector", "alpha_scheme"])
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--out", default="ablation", help="report path prefix")

    p = sub.add_parser("export-attention", help="write attention-weight CSV tables")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default="attention", help="output path prefix")
    p.add_argument("--buckets", default="1-4,5-8,9-12",
                   help="degree buckets, e.g. 1-4,5-8,9-12")
    return parser


def _load(args):
    from .config import parse_config
    from .data import load_dataset

    config = parse_config(args.config)
    if args.cache_dir is not None:
        config = config.replace(cache_dir=args.cache_dir)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    dataset = load_dataset(config.dataset_dir)
    return config, dataset


def _cmd_preprocess(args) -> int:
    from .pipeline import preprocess

    config, dataset = _load(args)
    for path in preprocess(dataset, config):
        print(f"wrote {path}")
    return 0


def _default_checkpoint(config) -> str:
    return os.path.join(config.cache_dir, "checkpoint.gmck")


def _cmd_train(args) -> int:
    from .model import evaluate_accuracy, fit, predict
    from .nn import save_checkpoint
    from .pipeline import load_stacks

    config, dataset = _load(args)
    feature_stack, label_stack = load_stacks(dataset, config, force=args.force)
    ckpt = args.checkpoint or _default_checkpoint(config)
    log_path = args.out or ckpt + ".log.jsonl"
    result = fit(feature_stack, label_stack, dataset.labels, dataset.splits, config,
                 num_classes=dataset.num_classes, log_path=log_path)
    save_checkpoint(ckpt, result.model.params, result.optimizer)
    pred = predict(result.model, feature_stack, label_stack)
    test_acc = evaluate_accuracy(pred, dataset.labels, dataset.splits.test)
    print(f"best val accuracy {result.best_val_acc:.4f} (epoch {result.best_epoch}), "
          f"test accuracy {test_acc:.4f}")
    print(f"wrote {ckpt} and {log_path}")
    return 0


def _restore_model(config, dataset, feature_stack, label_stack, checkpoint):
    import numpy as np

    from .model import GamlpModel
    from .nn import load_checkpoint, restore_params

    rng = np.random.default_rng(config.seed)
    model = GamlpModel(config, dataset.n, feature_stack.dim, dataset.num_classes,
                       feature_stack.steps,
                       0 if label_stack is None else label_stack.steps, rng)
    values, _ = load_checkpoint(checkpoint)
    restore_params(model.params, values)
    return model


def _cmd_eval(args) -> int:
    from .model import evaluate_accuracy, predict
    from .pipeline import load_stacks

    config, dataset = _load(args)
    if not os.path.exists(args.checkpoint):
        raise FileNotFoundError(f"checkpoint {args.checkpoint} not found; "
                                "run 'gamlp train' first")
    feature_stack, label_stack = load_stacks(dataset, config)
    model = _restore_model(config, dataset, feature_stack, label_stack, args.checkpoint)
    pred = predict(model, feature_stack, label_stack)
    for part in ("train", "val", "test"):
        split = getattr(dataset.splits, part)
        acc = evaluate_accuracy(pred, dataset.labels, split)
        print(f"{part} accuracy {acc:.4f} ({split.size} nodes)")
    return 0


def _cmd_sweep(args) -> int:
    from .experiments import (method_config, run_depth_sweep, run_sparsity_sweep,
                              write_report)

    config, dataset = _load(args)
    methods = {name: method_config(config, name.strip())
               for name in args.methods.split(",") if name.strip()}
    base_seed = config.seed
    if args.kind == "depth":
        levels = [int(v) for v in args.levels.split(",")]
        report = run_depth_sweep(dataset, levels, methods, n_runs=args.runs,
                                 base_seed=base_seed)
    elif args.kind == "edge":
        levels = [float(v) for v in args.levels.split(",")]
        report = run_sparsity_sweep(dataset, "edge", levels, methods,
                                    n_runs=args.runs, base_seed=base_seed)
    else:
        levels = [int(v) for v in args.levels.split(",")]
        report = run_sparsity_sweep(dataset, "label", levels, methods,
                                    n_runs=args.runs, base_seed=base_seed)
    csv_path, json_path = write_report(report, args.out)
    for row in report["summary"]:
        print(f"{row['method']:>12} {row['setting']:>10} "
              f"{row['mean']:.4f} +- {row['std']:.4f} ({row['n_runs']} runs)")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def _cmd_ablate(args) -> int:
    from .experiments import run_ablation, write_report

    config, dataset = _load(args)
    report = run_ablation(dataset, args.which, config, n_runs=args.runs,
                          base_seed=config.seed)
    csv_path, json_path = write_report(report, args.out)
    for row in report["summary"]:
        print(f"{row['method']:>16} {row['mean']:.4f} +- {row['std']:.4f} "
              f"({row['n_runs']} runs)")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def _parse_buckets(spec: str):
    buckets = []
    for part in spec.split(","):
        lo, hi = part.split("-")
        buckets.append((int(lo), int(hi)))
    return buckets


def _cmd_export_attention(args) -> int:
    from .model import export_attention, write_attention_csv
    from .pipeline import load_stacks

    config, dataset = _load(args)
    if not os.path.exists(args.checkpoint):
        raise FileNotFoundError(f"checkpoint {args.checkpoint} not found; "
                                "run 'gamlp train' first")
    feature_stack, label_stack = load_stacks(dataset, config)
    model = _restore_model(config, dataset, feature_stack, label_stack, args.checkpoint)
    degrees = dataset.graph.degrees()
    per_node, per_bucket = export_attention(model, feature_stack, label_stack,
                                            degrees, _parse_buckets(args.buckets))
    node_path = f"{args.out}_nodes.csv"
    bucket_path = f"{args.out}_buckets.csv"
    write_attention_csv(per_node, per_bucket, node_path, bucket_path,
                        feature_stack.steps)
    print(f"wrote {node_path} and {bucket_path}")
    return 0


_HANDLERS = {
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "ablate": _cmd_ablate,
    "export-attention": _cmd_export_attention,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _set_threads(argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except Exception as e:  # one-line diagnostic, nonzero exit
        print(f"gamlp: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
