"""Experiment runner: default MLP, GA-selected MLP and PCA-reduced MLP arms.

Every arm reports training accuracy (the model scored on the data it was
fit to) and k-fold cross-validated accuracy on shared folds.  Results are
written as ``report.json``, a plain-text table and, for the GA arm, a
per-generation ``convergence.csv``.
"""
from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, gafs, pca
from .dataset import (
    Dataset,
    filter_min_class_count,
    generate_synthetic,
    load_builtin,
    load_csv,
    stratified_kfold,
)
from .errors import BadConfig, BadThreshold, FeatureOptError
from .mlp import MlpConfig, accuracy, cv_accuracy, predict, train
from .numerics import derive_seed

ARMS = ("default", "ga", "pca")
REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "iris"
    label_col: str | None = None
    missing_policy: str = "impute"
    arms: tuple = ARMS
    pca_t: float | None = 0.95
    pca_k: int | None = None
    scale_inputs: bool = False
    pca_fit_scope: str = "full_dataset"
    min_class_count: int = 1
    cv_folds: int = 5
    seed: int = 0
    out: str | None = None
    ga_population: int = 30
    ga_generations: int = 30
    ga_tournament: int = 3
    ga_crossover_rate: float = 0.9
    ga_mutation_rate: float | None = None
    ga_elite: int = 2
    ga_cv_folds: int = 3
    mlp_hidden: tuple = (100,)
    mlp_max_epochs: int = 200

    def __post_init__(self):
        arms = self.arms
        if isinstance(arms, str):
            arms = tuple(a.strip() for a in arms.split(",") if a.strip())
        object.__setattr__(self, "arms", tuple(arms))
        object.__setattr__(self, "mlp_hidden", tuple(int(h) for h in self.mlp_hidden))
        if not self.arms:
            raise BadConfig("arms must not be empty")
        unknown = [a for a in self.arms if a not in ARMS]
        if unknown:
            raise BadConfig(f"unknown arm(s) {', '.join(unknown)}; choose from {', '.join(ARMS)}")
        if self.pca_k is not None:
            object.__setattr__(self, "pca_t", None)
            if self.pca_k < 1:
                raise BadConfig("--pca-k must be >= 1")
        elif self.pca_t is None or not (0.0 < self.pca_t <= 1.0):
            raise BadThreshold(f"--pca-t must lie in the range (0, 1], got {self.pca_t}")
        if self.cv_folds < 2:
            raise BadConfig("--cv-folds must be >= 2")
        if self.min_class_count < 1:
            raise BadConfig("--min-class-count must be >= 1")
        if self.pca_fit_scope not in ("full_dataset", "per_fold"):
            raise BadConfig("pca_fit_scope must be full_dataset or per_fold")

    def mlp_config(self) -> MlpConfig:
        return MlpConfig(hidden_sizes=self.mlp_hidden, max_epochs=self.mlp_max_epochs, seed=self.seed)

    def ga_config(self) -> gafs.GaConfig:
        return gafs.GaConfig(
            population_size=self.ga_population, generations=self.ga_generations,
            tournament_size=self.ga_tournament, crossover_rate=self.ga_crossover_rate,
            mutation_rate=self.ga_mutation_rate, elite_count=self.ga_elite,
            fitness_cv_folds=self.ga_cv_folds, seed=self.seed, mlp_cfg=self.mlp_config())

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["arms"] = list(self.arms)
        d["mlp_hidden"] = list(self.mlp_hidden)
        d.pop("out")
        return d


def _coerce(value: str, current, name):
    if isinstance(current, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise BadConfig(f"{name}: expected a boolean, got {value!r}")
    if name == "arms":
        return value
    if name == "mlp_hidden":
        return tuple(int(v) for v in value.split(",") if v.strip())
    if value.lower() in ("", "none"):
        return None
    try:
        if name in ("pca_k", "min_class_count", "cv_folds", "seed", "ga_population",
                    "ga_generations", "ga_tournament", "ga_elite", "ga_cv_folds", "mlp_max_epochs"):
            return int(value)
        if name in ("pca_t", "ga_crossover_rate", "ga_mutation_rate"):
            return float(value)
    except ValueError:
        raise BadConfig(f"{name}: cannot parse {value!r}") from None
    return value


def parse_config_text(text: str, **overrides) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    defaults = ExperimentConfig()
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in names:
            raise BadConfig(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(value, getattr(defaults, key), key)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), **overrides)


def resolve_dataset(spec: str, label_col: str | None = None, missing_policy: str = "impute") -> Dataset:
    """``iris``/``heart``, ``synthetic:n,d,informative,class_sep,seed`` or a CSV path."""
    if spec.startswith("synthetic:"):
        try:
            n, d, k, sep, seed = spec.split(":", 1)[1].split(",")
            return generate_synthetic(int(n), int(d), int(k), float(sep), int(seed))
        except ValueError:
            raise BadConfig(f"bad synthetic spec {spec!r}; expected synthetic:n,d,informative,class_sep,seed") from None
    if spec.lower().endswith(".csv") or Path(spec).is_file():
        if not label_col:
            raise BadConfig("--label-col is required for CSV datasets")
        return load_csv(spec, label_col, missing_policy)
    return load_builtin(spec, missing_policy)


@dataclass
class ArmResult:
    name: str
    train_accuracy: float
    cv_accuracy_mean: float
    cv_accuracy_folds: list
    n_features: int
    detail: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "train_accuracy": self.train_accuracy,
                "cv_accuracy_mean": self.cv_accuracy_mean,
                "cv_accuracy_folds": list(self.cv_accuracy_folds),
                "n_features": self.n_features, "detail": self.detail}


@dataclass
class ExperimentReport:
    dataset: dict
    seed: int
    config: dict
    arms: list
    convergence: list = field(default_factory=list)

    def arm(self, name) -> ArmResult:
        for a in self.arms:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "config": self.config,
            "arms": [a.to_dict() for a in self.arms],
            "versions": {"featureopt": __version__, "numpy": np.__version__,
                         "report_schema": REPORT_SCHEMA_VERSION},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def timing(self) -> dict:
        return {a.name: a.wall_time for a in self.arms}

    def to_table(self) -> str:
        ds = self.dataset
        lines = [f"dataset: {ds['name']}  (n={ds['n_samples']}, d={ds['n_features']}, "
                 f"classes={ds['n_classes']})  seed={self.seed}",
                 f"{'configuration':<50} {'features':>8} {'train acc':>10} {'cv acc':>8} {'train acc (,)':>14}"]
        for a in self.arms:
            lines.append(f"{_arm_label(a):<50} {a.n_features:>8d} {a.train_accuracy:>10.3f} "
                         f"{a.cv_accuracy_mean:>8.3f} {_comma(a.train_accuracy):>14}")
        return "\n".join(lines) + "\n"


def _comma(x: float) -> str:
    return f"{x:.3f}".replace(".", ",")


def _arm_label(a: ArmResult) -> str:
    if a.name == "default":
        return "MLP with default params"
    if a.name == "ga":
        return "GA feature selection"
    mode = a.detail.get("mode", "")
    return f"PCA {mode} -> {a.n_features} components, default MLP"


def _score_arm(name, ds: Dataset, folds, mlp_cfg, t0, detail, cv_dataset_fn=None):
    model, _ = train(ds, mlp_cfg)
    train_acc = accuracy(model, ds.X, ds.y)
    if cv_dataset_fn is None:
        cv_mean, cv_folds = cv_accuracy(ds, folds, mlp_cfg)
    else:
        cv_mean, cv_folds = cv_dataset_fn()
    detail = dict(detail, train_accuracy_comma=_comma(train_acc))
    return ArmResult(name, float(train_acc), float(cv_mean), [float(s) for s in cv_folds],
                     ds.n_features, detail, time.perf_counter() - t0)


def _pca_kwargs(cfg):
    return {"k": cfg.pca_k} if cfg.pca_k is not None else {"variance": cfg.pca_t}


def _pca_per_fold_cv(ds, folds, cfg, mlp_cfg):
    scores = []
    for f, (tr, te) in enumerate(folds.splits()):
        model = pca.fit(ds.X[tr], scale_inputs=cfg.scale_inputs, **_pca_kwargs(cfg))
        names = [f"pc{i + 1}" for i in range(model.k)]
        tr_ds = ds.subset(tr).with_features(pca.transform(model, ds.X[tr]), names)
        net, _ = train(tr_ds, mlp_cfg.replace(seed=derive_seed(mlp_cfg.seed, f)))
        label_map = np.unique(ds.y[tr])
        pred = label_map[predict(net, pca.transform(model, ds.X[te]))]
        scores.append(float(np.mean(pred == ds.y[te])))
    return float(np.mean(scores)), scores


def _run_arm(name, ds, folds, cfg: ExperimentConfig, report: ExperimentReport):
    t0 = time.perf_counter()
    mlp_cfg = cfg.mlp_config()
    if name == "default":
        return _score_arm(name, ds, folds, mlp_cfg, t0, {})
    if name == "ga":
        ga_cfg = cfg.ga_config()
        best, best_fit, log = gafs.evolve(ds, ga_cfg)
        report.convergence = log
        detail = {"mask": best.to_string(), "popcount": best.popcount,
                  "selected_features": [ds.feature_names[i] for i in best.indices],
                  "best_fitness": best_fit, "generations": ga_cfg.generations,
                  "population_size": ga_cfg.population_size,
                  "evaluations": log[-1].evaluations_used if log else None}
        return _score_arm(name, ds.select_features(best.indices), folds, mlp_cfg, t0, detail)
    if name == "pca":
        model = pca.fit(ds.X, scale_inputs=cfg.scale_inputs, **_pca_kwargs(cfg))
        names = [f"pc{i + 1}" for i in range(model.k)]
        z_ds = ds.with_features(pca.transform(model, ds.X), names)
        mode = f"fixed_k({cfg.pca_k})" if cfg.pca_k is not None else f"variance({cfg.pca_t})"
        detail = {"k": model.k, "mode": mode, "scale_inputs": cfg.scale_inputs,
                  "cumulative_variance_ratio": model.cumulative_ratio,
                  "explained_variance_ratio": [float(r) for r in model.explained_variance_ratio],
                  "pca_fit_scope": cfg.pca_fit_scope}
        if cfg.pca_k is None:
            # the retained k depends heavily on scaling, so report both choices
            detail["k_by_scaling"] = {
                "unscaled": pca.fit(ds.X, variance=cfg.pca_t).k,
                "scaled": pca.fit(ds.X, variance=cfg.pca_t, scale_inputs=True).k}
        cv_fn = None
        if cfg.pca_fit_scope == "per_fold":
            cv_fn = partial(_pca_per_fold_cv, ds, folds, cfg, mlp_cfg)
        return _score_arm(name, z_ds, folds, mlp_cfg, t0, detail, cv_fn)
    raise BadConfig(f"unknown arm {name!r}")


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run every requested arm on one dataset and optionally write the outputs."""
    ds = resolve_dataset(cfg.dataset, cfg.label_col, cfg.missing_policy)
    original_classes = ds.n_classes
    if cfg.min_class_count > 1:
        ds = filter_min_class_count(ds, cfg.min_class_count)
    folds = stratified_kfold(ds, cfg.cv_folds, cfg.seed)
    report = ExperimentReport(
        dataset={"name": ds.name, "n_samples": ds.n_samples, "n_features": ds.n_features,
                 "n_classes": ds.n_classes, "n_classes_before_filter": original_classes,
                 "class_counts": [int(c) for c in ds.class_counts()]},
        seed=cfg.seed, config=cfg.to_dict(), arms=[])
    for name in cfg.arms:
        try:
            report.arms.append(_run_arm(name, ds, folds, cfg, report))
        except FeatureOptError as exc:
            exc.args = (f"arm {name}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
    if write and cfg.out:
        write_report(report, cfg.out)
    return report


def emit_convergence(log, path) -> Path:
    if not log:
        raise BadConfig("convergence log is empty")
    path = Path(path)
    gafs.write_convergence(log, path)
    return path


def write_report(report: ExperimentReport, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "table": out / "report.txt",
             "timing": out / "timing.json"}
    paths["report"].write_text(report.to_json(), encoding="utf-8")
    paths["table"].write_text(report.to_table(), encoding="utf-8")
    paths["timing"].write_text(json.dumps(report.timing(), indent=2) + "\n", encoding="utf-8")
    if report.convergence:
        paths["convergence"] = emit_convergence(report.convergence, out / "convergence.csv")
    return paths
