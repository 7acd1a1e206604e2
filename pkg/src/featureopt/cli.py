"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gafs, harness, mlp, pca
from .dataset import filter_min_class_count, generate_synthetic, save_csv, stratified_kfold
from .errors import ConfigError, FeatureOptError


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _unit_interval(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number in the range (0, 1], got {text!r}") from None
    if not (0.0 < v <= 1.0):
        raise argparse.ArgumentTypeError(f"{v} is outside the valid range (0, 1]")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _add_data_flags(p):
    p.add_argument("--dataset", default=None,
                   help="iris, heart, a CSV path, or synthetic:n,d,informative,class_sep,seed")
    p.add_argument("--label-col", default=None, help="label column for CSV datasets")
    p.add_argument("--missing", dest="missing_policy", choices=("impute", "drop_row"), default=None)
    p.add_argument("--min-class-count", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--cv-folds", type=_positive_int, default=None)


def _add_pca_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--pca-t", type=_unit_interval, default=None, help="variance to retain, in (0, 1]")
    g.add_argument("--pca-k", type=_positive_int, default=None, help="fixed component count")
    p.add_argument("--scale", dest="scale_inputs", action="store_true", default=None,
                   help="standardize columns before PCA")


def _add_ga_flags(p):
    p.add_argument("--generations", dest="ga_generations", type=int, default=None)
    p.add_argument("--population", dest="ga_population", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="featureopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("experiment", help="run the default / ga / pca comparison")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--arms", default=None, help="comma list from default,ga,pca")
    p.add_argument("--pca-scope", dest="pca_fit_scope", choices=("full_dataset", "per_fold"), default=None)
    _add_data_flags(p)
    _add_pca_flags(p)
    _add_ga_flags(p)

    p = sub.add_parser("select", help="GA feature selection only; prints the best mask")
    _add_data_flags(p)
    _add_ga_flags(p)

    p = sub.add_parser("pca", help="fit PCA; prints k and variance ratios")
    _add_data_flags(p)
    _add_pca_flags(p)

    p = sub.add_parser("train", help="train the default MLP and report accuracies")
    _add_data_flags(p)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--n", type=_positive_int, default=300)
    p.add_argument("--d", type=_positive_int, default=200)
    p.add_argument("--informative", type=_positive_int, default=10)
    p.add_argument("--class-sep", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV file to write")
    return parser


_CONFIG_KEYS = ("dataset", "label_col", "missing_policy", "min_class_count", "seed", "cv_folds",
                "pca_t", "pca_k", "scale_inputs", "arms", "pca_fit_scope",
                "ga_generations", "ga_population")


def _experiment_config(args, **forced) -> harness.ExperimentConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None}
    if overrides.get("pca_k") is not None:
        overrides["pca_t"] = None
    overrides.update(forced)
    config_path = getattr(args, "config", None)
    if config_path:
        return harness.load_config(config_path, **overrides)
    return harness.ExperimentConfig(**overrides)


def _load(cfg):
    ds = harness.resolve_dataset(cfg.dataset, cfg.label_col, cfg.missing_policy)
    if cfg.min_class_count > 1:
        ds = filter_min_class_count(ds, cfg.min_class_count)
    return ds


def _cmd_experiment(args):
    cfg = _experiment_config(args)
    out = args.out or "results"
    report = harness.run_experiment(cfg, write=False)
    paths = harness.write_report(report, out)
    print(report.to_table(), end="")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")


def _cmd_select(args):
    cfg = _experiment_config(args)
    ds = _load(cfg)
    best, fit, log = gafs.evolve(ds, cfg.ga_config())
    print(f"best_mask {best.to_string()}")
    print(f"best_fitness {fit:.6f}")
    print("selected " + ",".join(ds.feature_names[i] for i in best.indices))
    if args.out and log:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        path = harness.emit_convergence(log, Path(args.out) / "convergence.csv")
        print(f"wrote convergence: {path}")


def _cmd_pca(args):
    cfg = _experiment_config(args)
    ds = _load(cfg)
    kwargs = {"k": cfg.pca_k} if cfg.pca_k is not None else {"variance": cfg.pca_t}
    model = pca.fit(ds.X, scale_inputs=cfg.scale_inputs, **kwargs)
    ratios = model.spectrum / model.total_variance if model.total_variance > 0 else model.spectrum
    print(f"k {model.k}")
    print(f"cumulative_ratio {model.cumulative_ratio:.6f}")
    print("variance_ratios " + " ".join(f"{r:.6f}" for r in ratios))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        pca.save(model, Path(args.out) / "pca_model.txt")
        np.savetxt(Path(args.out) / "scores.csv", pca.transform(model, ds.X), delimiter=",")


def _cmd_train(args):
    cfg = _experiment_config(args, arms="default")
    ds = _load(cfg)
    model, hist = mlp.train(ds, cfg.mlp_config())
    cv_mean, folds = mlp.cv_accuracy(ds, stratified_kfold(ds, cfg.cv_folds, cfg.seed), cfg.mlp_config())
    result = {"train_accuracy": mlp.accuracy(model, ds.X, ds.y), "cv_accuracy_mean": cv_mean,
              "cv_accuracy_folds": folds, "epochs": hist.stopped_epoch}
    print(json.dumps(result, indent=2))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        mlp.save(model, Path(args.out) / "mlp_model.txt")


def _cmd_synth(args):
    ds = generate_synthetic(args.n, args.d, args.informative, args.class_sep, args.seed)
    save_csv(ds, args.out)
    print(f"wrote {args.out} ({ds.n_samples} x {ds.n_features}, label column 'label')")


COMMANDS = {"experiment": _cmd_experiment, "select": _cmd_select, "pca": _cmd_pca,
            "train": _cmd_train, "synth": _cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        COMMANDS[args.command](args)
    except FeatureOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
