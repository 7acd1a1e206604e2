"""Principal component analysis by eigendecomposition of the covariance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import textio
from .errors import BadShape, BadThreshold, ConfigError, KTooLarge, TooFewRows
from .numerics import as_matrix, covariance, standardize, sym_eigen

_RATIO_SLACK = 1e-12


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float
    spectrum: np.ndarray  # every eigenvalue of the covariance, descending

    @property
    def k(self) -> int:
        return self.components.shape[1]

    @property
    def d(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance <= 0:
            return np.zeros(self.k)
        return self.explained_variance / self.total_variance

    @property
    def cumulative_ratio(self) -> float:
        return float(np.sum(self.explained_variance_ratio))


def components_for_variance(eigenvalues, threshold: float) -> int:
    """Smallest k whose leading eigenvalues carry at least ``threshold`` of the total.

    >>> components_for_variance([4, 3, 2, 1], 0.6)
    2
    """
    if not (0.0 < threshold <= 1.0):
        raise BadThreshold(f"variance threshold must lie in (0, 1], got {threshold}")
    w = np.asarray(eigenvalues, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise BadShape("eigenvalues must be a non-empty vector")
    if np.any(np.diff(w) > 0) or np.any(w < 0):
        raise ConfigError("eigenvalues must be descending and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ConfigError("eigenvalues sum to zero")
    ratio = np.cumsum(w) / total
    k = int(np.argmax(ratio >= threshold - _RATIO_SLACK)) + 1
    return min(k, int(np.count_nonzero(w > 0)))


def _normalize_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def fit(X, k: int | None = None, variance: float | None = None,
        scale_inputs: bool = False) -> PcaModel:
    """Fit PCA keeping either ``k`` components or enough for ``variance``.

    With neither given, 95% of the variance is retained.  When the data
    has more columns than rows the n x n Gram matrix is decomposed instead
    of the d x d covariance.
    """
    X = as_matrix(X)
    n, d = X.shape
    if n < 2:
        raise TooFewRows(f"PCA needs at least 2 rows, got {n}")
    if k is not None and variance is not None:
        raise ConfigError("give either k or variance, not both")
    if k is None and variance is None:
        variance = 0.95
    if variance is not None and not (0.0 < variance <= 1.0):
        raise BadThreshold(f"variance threshold must lie in (0, 1], got {variance}")
    max_k = min(n - 1, d)
    if k is not None and not (1 <= k <= max_k):
        raise KTooLarge(f"k={k} outside 1..{max_k} (min(n-1, d))")

    if scale_inputs:
        Xc, mean, scale = standardize(X)
    else:
        mean = X.mean(axis=0)
        scale = np.ones(d)
        Xc = X - mean

    if d <= n:
        eig = sym_eigen(covariance(Xc))
        w = np.maximum(eig.eigenvalues, 0.0)
        V = eig.eigenvectors
        total = float(np.trace(covariance(Xc)))
    else:
        G = Xc @ Xc.T / (n - 1)
        G = 0.5 * (G + G.T)
        eig = sym_eigen(G)
        w = np.maximum(eig.eigenvalues, 0.0)
        total = float(np.trace(G))
        rank = int(np.count_nonzero(w > 0))
        V = Xc.T @ eig.eigenvectors[:, :rank] / np.sqrt((n - 1) * w[:rank])
        w = w[:min(n, d)]

    if k is None:
        if total <= 0:
            raise ConfigError("data has zero variance")
        k = components_for_variance(w, variance)
    if k > V.shape[1]:
        raise KTooLarge(f"k={k} exceeds the numeric rank {V.shape[1]} of the data")
    components = _normalize_signs(V[:, :k])
    return PcaModel(mean, scale, components, w[:k].copy(), total, w.copy())


def transform(model: PcaModel, X) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[1] != model.d:
        raise BadShape(f"X has {X.shape[1]} columns, model expects {model.d}")
    return ((X - model.mean) / model.scale) @ model.components


def inverse_transform(model: PcaModel, Z) -> np.ndarray:
    Z = as_matrix(Z, "Z")
    if Z.shape[1] != model.k:
        raise BadShape(f"Z has {Z.shape[1]} columns, model has {model.k} components")
    return (Z @ model.components.T) * model.scale + model.mean


def save(model: PcaModel, path) -> None:
    meta = {"d": model.d, "k": model.k, "total_variance": repr(model.total_variance)}
    textio.dump(path, "pca", meta, [
        ("mean", model.mean), ("scale", model.scale), ("components", model.components),
        ("explained_variance", model.explained_variance), ("spectrum", model.spectrum),
    ])


def load(path) -> PcaModel:
    meta, a = textio.load(path, "pca")
    return PcaModel(a["mean"].ravel(), a["scale"].ravel(), a["components"],
                    a["explained_variance"].ravel(), float(meta["total_variance"]),
                    a["spectrum"].ravel())
