"""Tabular classification datasets: CSV ingestion, bundled data,
class filtering, stratified folds and a synthetic high-dimensional set.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadShape,
    ClassTooSmall,
    ConfigError,
    EmptyAfterCleaning,
    ParseError,
    UnknownDataset,
    UnknownLabelColumn,
)
from .numerics import RandomStream

MISSING = "?"

HEART_CATEGORICAL = ("sex", "cp", "fbs", "restecg", "exang", "slope", "ca", "thal")
BUILTINS = ("iris", "heart")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    class_names: tuple
    name: str = "dataset"

    def __post_init__(self):
        X = _frozen(self.X, np.float64)
        y = _frozen(self.y, np.int64)
        if X.ndim != 2:
            raise BadShape(f"X must be 2-D, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise BadShape(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not np.all(np.isfinite(X)):
            raise BadShape("X contains NaN or Inf")
        if len(self.feature_names) != X.shape[1]:
            raise BadShape("feature_names length does not match X columns")
        c = len(self.class_names)
        if y.size and (y.min() < 0 or y.max() >= c):
            raise BadShape("labels outside 0..c-1")
        if set(np.unique(y).tolist()) != set(range(c)):
            raise BadShape("every class must appear at least once")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def class_counts(self):
        return np.bincount(self.y, minlength=self.n_classes)

    def select_features(self, columns) -> "Dataset":
        """Keep the given column indices (or a boolean mask)."""
        columns = np.asarray(columns)
        if columns.dtype == bool:
            columns = np.flatnonzero(columns)
        return Dataset(self.X[:, columns], self.y,
                       tuple(self.feature_names[i] for i in columns),
                       self.class_names, self.name)

    def with_features(self, X, feature_names) -> "Dataset":
        return Dataset(X, self.y, tuple(feature_names), self.class_names, self.name)

    def subset(self, rows) -> "Dataset":
        """Row subset.  Classes absent from ``rows`` are dropped and relabelled."""
        rows = np.asarray(rows)
        y = self.y[rows]
        present = np.unique(y)
        remap = np.full(self.n_classes, -1)
        remap[present] = np.arange(present.size)
        return Dataset(self.X[rows], remap[y],
                       self.feature_names,
                       tuple(self.class_names[i] for i in present), self.name)


def _read_table(path, label_column):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        if label_column not in header:
            raise UnknownLabelColumn(f"label column {label_column!r} not in header of {path}")
        li = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != li]
        rows, labels = [], []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(raw)}", row=lineno)
            label = raw[li].strip()
            if label in ("", MISSING):
                raise ParseError("missing class label", row=lineno, column=label_column)
            values = []
            for name, cell in zip(header, raw):
                if name == label_column:
                    continue
                cell = cell.strip()
                if cell == MISSING:
                    values.append(np.nan)
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"non-numeric value {cell!r}", row=lineno, column=name) from None
            rows.append(values)
            labels.append(label)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return X, labels, feature_names


def _mode(values):
    counts = Counter(values.tolist())
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _clean(X, labels, feature_names, missing_policy, categorical):
    missing = np.isnan(X)
    if missing_policy == "drop_row":
        keep = ~missing.any(axis=1)
        X = X[keep]
        labels = [lab for lab, k in zip(labels, keep) if k]
    elif missing_policy == "impute":
        X = X.copy()
        for j, name in enumerate(feature_names):
            col_missing = missing[:, j]
            if not col_missing.any():
                continue
            present = X[~col_missing, j]
            if present.size == 0:
                raise EmptyAfterCleaning(f"column {name!r} has no values to impute from")
            fill = _mode(present) if name in categorical else float(np.median(present))
            X[col_missing, j] = fill
    else:
        raise ConfigError(f"unknown missing_policy {missing_policy!r}")
    if X.shape[0] == 0:
        raise EmptyAfterCleaning("no rows left after cleaning")
    return X, labels


def _encode_labels(labels):
    class_names = list(dict.fromkeys(labels))
    index = {name: i for i, name in enumerate(class_names)}
    return np.array([index[lab] for lab in labels], dtype=np.int64), class_names


def load_csv(path, label_column: str, missing_policy: str = "impute",
             categorical: Sequence[str] = (), name: str | None = None) -> Dataset:
    """Load a numeric CSV with a header row.

    Cells equal to ``"?"`` are missing.  Under ``"impute"`` they take the
    column median, or the column mode for columns listed in
    ``categorical``; under ``"drop_row"`` the whole row is removed.
    Labels become dense integers in order of first appearance.
    """
    X, labels, feature_names = _read_table(path, label_column)
    X, labels = _clean(X, labels, feature_names, missing_policy, set(categorical))
    y, class_names = _encode_labels(labels)
    return Dataset(X, y, feature_names, class_names, name or Path(path).stem)


def save_csv(ds: Dataset, path, label_column: str = "label") -> None:
    """Write ``ds`` so that :func:`load_csv` reproduces it exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [label_column])
        for row, label in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in row] + [ds.class_names[label]])


def builtin_path(name: str) -> Path:
    return Path(str(resources.files("featureopt") / "data" / f"{name}.csv"))


def load_builtin(name: str, missing_policy: str = "impute") -> Dataset:
    """Bundled ``iris`` (150 x 4, 3 classes) or Cleveland ``heart`` (303 x 13).

    Heart targets collapse to absence (code 0) versus presence (any
    nonzero code).
    """
    if name == "iris":
        return load_csv(builtin_path("iris"), "species", missing_policy, name="iris")
    if name == "heart":
        X, labels, feature_names = _read_table(builtin_path("heart"), "num")
        X, labels = _clean(X, labels, feature_names, missing_policy, set(HEART_CATEGORICAL))
        y = np.array([0 if float(lab) == 0 else 1 for lab in labels], dtype=np.int64)
        return Dataset(X, y, feature_names, ("absence", "presence"), "heart")
    raise UnknownDataset(f"unknown dataset {name!r}; choose one of {', '.join(BUILTINS)}")


def filter_min_class_count(ds: Dataset, min_n: int) -> Dataset:
    """Drop classes with fewer than ``min_n`` samples and relabel densely."""
    if min_n < 1:
        raise ConfigError("min_n must be >= 1")
    counts = ds.class_counts()
    keep = np.flatnonzero(counts >= min_n)
    if keep.size == 0:
        raise EmptyAfterCleaning(f"no class has at least {min_n} samples")
    if keep.size == ds.n_classes:
        return ds
    return ds.subset(np.flatnonzero(np.isin(ds.y, keep)))


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray
    seed: int

    def test_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == f)

    def train_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != f)

    def splits(self):
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)


def stratified_kfold(ds: Dataset, k: int, seed: int = 0) -> FoldAssignment:
    """Stratified k-fold assignment.

    Each class's indices are shuffled and dealt round-robin into the
    folds.  The dealing position carries over from one class to the next
    so fold sizes stay balanced as well.
    """
    if k < 2:
        raise ConfigError("k must be >= 2")
    counts = ds.class_counts()
    for c, cnt in enumerate(counts):
        if cnt < k:
            raise ClassTooSmall(
                f"class {ds.class_names[c]!r} has {cnt} samples, fewer than k={k}",
                class_name=ds.class_names[c])
    rng = RandomStream(seed, 0)
    fold_of = np.empty(ds.n_samples, dtype=np.int64)
    pos = 0
    for c in range(ds.n_classes):
        idx = np.flatnonzero(ds.y == c)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = (pos + np.arange(idx.size)) % k
        pos = (pos + idx.size) % k
    fold_of.flags.writeable = False
    return FoldAssignment(k, fold_of, seed)


def generate_synthetic(n: int, d: int, informative: int, class_sep: float,
                       seed: int = 0) -> Dataset:
    """Balanced two-class data with a few informative columns.

    The first ``informative`` columns are unit Gaussians whose class means
    sit at ``-/+ class_sep / (2 * sqrt(informative))``, so the two class
    centroids are ``class_sep`` apart in Euclidean distance.  The rest is
    standard Gaussian noise.  Informative columns are named ``inf_<j>``, noise ``noise_<j>``.
    """
    if n < 4 or d < 1 or not (1 <= informative <= d):
        raise BadShape(f"bad synthetic shape n={n}, d={d}, informative={informative}")
    rng = RandomStream(seed, 0)
    y = (np.arange(n) % 2)[rng.permutation(n)]
    X = rng.normal(n * d).reshape(n, d)
    X[:, :informative] += np.where(y == 1, 0.5, -0.5)[:, None] * (class_sep / np.sqrt(informative))
    names = [f"inf_{j}" for j in range(informative)] + [f"noise_{j}" for j in range(informative, d)]
    return Dataset(X, y, names, ("c0", "c1"), f"synthetic_n{n}_d{d}_i{informative}_s{seed}")
