"""End-to-end acceptance checks.

Each test prints one ``CRITERION <n>: PASS|FAIL`` line to the terminal before
asserting, so the summary is visible even when output capture is on.  The
iris, heart and synthetic experiments run once per module and are shared.
"""
import json
import time

import numpy as np
import pytest

from featureopt import cli, gafs, mlp, pca
from featureopt.dataset import load_builtin, stratified_kfold
from featureopt.gafs import FeatureMask
from featureopt.harness import ExperimentConfig, resolve_dataset, run_experiment
from featureopt.numerics import RandomStream, sym_eigen

SYNTH_SEEDS = (1, 2, 3, 4, 5)


def _verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def _run_cli(out_dir, dataset):
    t0 = time.perf_counter()
    code = cli.main(["experiment", "--dataset", dataset, "--arms", "default,ga,pca",
                     "--seed", "42", "--out", str(out_dir)])
    elapsed = time.perf_counter() - t0
    report = json.loads((out_dir / "report.json").read_text())
    arms = {a["name"]: a for a in report["arms"]}
    return code, elapsed, report, arms, out_dir


@pytest.fixture(scope="module")
def iris_run(tmp_path_factory):
    return _run_cli(tmp_path_factory.mktemp("iris"), "iris")


@pytest.fixture(scope="module")
def heart_run(tmp_path_factory):
    return _run_cli(tmp_path_factory.mktemp("heart"), "heart")


@pytest.fixture(scope="module")
def synthetic_runs():
    reports = {}
    for s in SYNTH_SEEDS:
        cfg = ExperimentConfig(dataset=f"synthetic:300,200,10,2.0,{s}", arms="default,ga,pca",
                               pca_k=5, seed=42)
        reports[s] = run_experiment(cfg, write=False)
    return reports


@pytest.mark.slow
def test_criterion_1_iris_table_row(iris_run, capsys):
    code, elapsed, _, arms, out = iris_run
    d, g, p = (arms[k]["train_accuracy"] for k in ("default", "ga", "pca"))
    ok = (code == 0 and d >= 0.98 and g >= 0.98 and p >= 0.90 and elapsed < 120
          and (out / "convergence.csv").exists())
    _verdict(capsys, 1, ok, f"iris train acc default={d:.3f} ga={g:.3f} pca={p:.3f} "
                            f"(k={arms['pca']['detail']['k']}), exit={code}, {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_2_heart_ordering(heart_run, capsys):
    code, elapsed, _, arms, _ = heart_run
    d, g, p = (arms[k]["cv_accuracy_mean"] for k in ("default", "ga", "pca"))
    d_train = arms["default"]["train_accuracy"]
    ok = code == 0 and g >= d and d >= p - 0.02 and 0.80 <= d_train <= 1.00 and elapsed < 900
    _verdict(capsys, 2, ok, f"heart cv acc ga={g:.3f} default={d:.3f} pca={p:.3f}, "
                            f"default train acc={d_train:.3f}, {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_3_synthetic_surrogate(synthetic_runs, capsys):
    ga_wins = pca_losses = 0
    rows = []
    for s, r in synthetic_runs.items():
        d, g, p = (r.arm(k).cv_accuracy_mean for k in ("default", "ga", "pca"))
        ga_wins += g - d >= 0.02
        pca_losses += p < d
        rows.append(f"s{s}: default={d:.3f} ga={g:.3f} pca5={p:.3f}")
    ok = ga_wins >= 3 and pca_losses >= 4
    _verdict(capsys, 3, ok, f"ga beats default by >=0.02 in {ga_wins}/5 (need 3), "
                            f"pca(5) below default in {pca_losses}/5 (need 4); " + "; ".join(rows))


def test_criterion_4_gradient_oracle(capsys):
    h = 1e-5
    worst = 0.0
    for seed in (0, 1, 2):
        model = mlp.init(2, 3, mlp.MlpConfig(hidden_sizes=(4,), activation="tanh", seed=seed))
        rng = RandomStream(seed, 7)
        X = rng.normal(10).reshape(5, 2)
        y = rng.integers(3, 5)
        _, gW, gb = mlp.loss_and_grad(model, X, y)
        params = [p.copy() for p in model.weights + model.biases]
        for p, g in zip(params, gW + gb):
            for idx in np.ndindex(p.shape):
                old = p[idx]
                losses = []
                for step in (h, -h):
                    p[idx] = old + step
                    m = mlp.MlpModel(tuple(params[:2]), tuple(params[2:]), model.config, 2, 3)
                    losses.append(mlp.loss_and_grad(m, X, y)[0])
                p[idx] = old
                numeric = (losses[0] - losses[1]) / (2 * h)
                denom = abs(numeric) + abs(g[idx])
                if denom >= 1e-8:
                    worst = max(worst, abs(numeric - g[idx]) / denom)
    _verdict(capsys, 4, worst < 1e-4, f"max relative gradient error {worst:.2e} over 3 seeds")


def test_criterion_5_eigensolver_oracle(capsys):
    worst = {"residual": 0.0, "orthogonality": 0.0, "reconstruction": 0.0}
    for i in range(20):
        B = RandomStream(1000 + i, 0).normal(400).reshape(20, 20)
        A = (B + B.T) / 2
        r = sym_eigen(A)
        V, w = r.eigenvectors, r.eigenvalues
        worst["residual"] = max(worst["residual"], np.abs(A @ V - V * w).max())
        worst["orthogonality"] = max(worst["orthogonality"], np.abs(V.T @ V - np.eye(20)).max())
        worst["reconstruction"] = max(worst["reconstruction"], np.abs(V @ np.diag(w) @ V.T - A).max())
    ok = all(v < 1e-8 for v in worst.values())
    _verdict(capsys, 5, ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def test_criterion_6_pca_properties(capsys):
    X = load_builtin("iris").X
    full = pca.fit(X, k=4)
    Z = pca.transform(full, X)
    round_trip = np.abs(pca.inverse_transform(full, Z) - X).max()
    errors = []
    for k in range(1, 5):
        m = pca.fit(X, k=k)
        errors.append(np.linalg.norm(X - pca.inverse_transform(m, pca.transform(m, X))))
    monotone = all(a >= b for a, b in zip(errors, errors[1:]))
    C = np.cov(Z, rowvar=False)
    off_diag = np.abs(C - np.diag(np.diag(C))).max()
    ok = round_trip < 1e-6 and monotone and off_diag < 1e-8
    _verdict(capsys, 6, ok, f"round trip {round_trip:.1e}, reconstruction errors "
                            f"{[round(float(e), 4) for e in errors]}, score covariance off-diagonal {off_diag:.1e}")


@pytest.mark.slow
def test_criterion_7_ga_properties(iris_run, heart_run, capsys):
    notes, ok = [], True
    for name, (_, _, report, arms, out) in (("iris", iris_run), ("heart", heart_run)):
        log = gafs.read_convergence(out / "convergence.csv")
        best = [e.best_fitness for e in log]
        ok &= all(a <= b for a, b in zip(best, best[1:]))
        cfg = ExperimentConfig(**{k: v for k, v in report["config"].items()
                                  if k in ExperimentConfig.__dataclass_fields__})
        ds = resolve_dataset(cfg.dataset)
        full = gafs.fitness(FeatureMask.full(ds.n_features), ds, cfg.ga_config())
        ga_best = arms["ga"]["detail"]["best_fitness"]
        ok &= ga_best >= full
        notes.append(f"{name}: best {ga_best:.4f} vs full mask {full:.4f}")

    again = run_experiment(ExperimentConfig(dataset="iris", seed=42), write=False).to_json()
    identical = again.encode() == (iris_run[4] / "report.json").read_bytes()
    ok &= identical
    _verdict(capsys, 7, ok, "; ".join(notes) + f"; rerun byte-identical={identical}")


def test_criterion_8_stratification(capsys):
    ds = load_builtin("heart")
    counts = ds.class_counts()
    worst = 0.0
    covered = True
    for seed in (0, 42, 7):
        folds = stratified_kfold(ds, 5, seed)
        members = []
        for f in range(5):
            test = folds.test_indices(f)
            members.extend(test.tolist())
            for c in range(ds.n_classes):
                in_fold = sum(1 for i in test if ds.y[i] == c)
                worst = max(worst, abs(in_fold - counts[c] / 5))
        covered &= sorted(members) == list(range(ds.n_samples))
    ok = worst <= 1 and covered
    _verdict(capsys, 8, ok, f"max deviation from proportional share {worst:.2f}, "
                            f"folds partition all {ds.n_samples} rows: {covered}")


@pytest.mark.slow
def test_criterion_9_convergence_csv(heart_run, capsys):
    _, _, report, _, out = heart_run
    log = gafs.read_convergence(out / "convergence.csv")
    generations = report["config"]["ga_generations"]
    rows_ok = len(log) == generations
    best_ge_mean = all(e.best_fitness >= e.mean_fitness for e in log)
    monotone = all(a.best_fitness <= b.best_fitness for a, b in zip(log, log[1:]))
    ok = rows_ok and best_ge_mean and monotone
    _verdict(capsys, 9, ok, f"{len(log)} rows for {generations} generations, best>=mean {best_ge_mean}, "
                            f"best non-decreasing {monotone} ({log[0].best_fitness:.4f} -> {log[-1].best_fitness:.4f})")


def test_criterion_10_bundled_data(capsys):
    iris, heart = load_builtin("iris"), load_builtin("heart")
    ok = (iris.X.shape == (150, 4) and iris.n_classes == 3 and iris.class_counts().tolist() == [50] * 3
          and heart.X.shape == (303, 13) and heart.n_classes == 2)
    _verdict(capsys, 10, ok, f"iris {iris.X.shape} classes {iris.class_counts().tolist()}, "
                             f"heart {heart.X.shape} classes {heart.class_counts().tolist()}")
