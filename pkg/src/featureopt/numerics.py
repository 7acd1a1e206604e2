"""Numeric substrate: seedable random stream, symmetric eigensolver,
column standardization and sample covariance.

Matrices are plain ``float64`` numpy arrays.  Everything here is a pure
function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadShape, DataError, NoConvergence, NonSymmetric, TooFewRows

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int (wrapping 64-bit arithmetic)."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def derive_seed(*parts: int) -> int:
    """Fold any number of integers into one 64-bit seed."""
    h = 0x6A09E667F3BCC909
    for p in parts:
        h = mix64(h ^ mix64((int(p) & _MASK) + _GOLDEN))
    return h


class RandomStream:
    """Counter-based 64-bit generator.

    Output ``i`` (0-based) of the stream ``(seed, stream_id)`` is::

        key  = mix64(seed + GOLDEN * (stream_id + 1))
        u64  = mix64(key + GOLDEN * (i + 1))

    with all arithmetic modulo 2**64 and ``mix64`` the SplitMix64
    finalizer.  Doubles are ``(u64 >> 11) * 2**-53``.  The recipe is
    small enough to port anywhere; ``tests/data/random_stream_vectors.txt``
    pins reference outputs.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed) & _MASK
        self.stream_id = int(stream_id) & _MASK
        self._key = mix64(self.seed + _GOLDEN * (self.stream_id + 1))
        self._counter = 0

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, counter={self._counter})"

    def next_u64(self, size: int) -> np.ndarray:
        size = int(size)
        idx = np.arange(self._counter + 1, self._counter + 1 + size, dtype=np.uint64)
        self._counter += size
        with np.errstate(over="ignore"):
            z = np.uint64(self._key) + np.uint64(_GOLDEN) * idx
            return _mix64_array(z)

    def uniform(self, size: int | None = None):
        """Doubles in [0, 1).  Returns a float when ``size`` is None."""
        n = 1 if size is None else size
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        return float(u[0]) if size is None else u

    def integers(self, high: int, size: int | None = None):
        """Integers in [0, high) by ``floor(uniform * high)``."""
        n = 1 if size is None else size
        out = np.minimum((self.uniform(n) * high).astype(np.int64), high - 1)
        return int(out[0]) if size is None else out

    def normal(self, size: int) -> np.ndarray:
        """Standard normals via Box-Muller (two uniforms per output, cosine branch)."""
        u = self.uniform(2 * size)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def bernoulli(self, p: float, size: int) -> np.ndarray:
        return self.uniform(size) < p

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of ``range(n)``: a stable argsort of ``n`` raw 64-bit draws."""
        return np.argsort(self.next_u64(n), kind="stable")


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(X, name="X") -> np.ndarray:
    """Coerce to a 2-D finite float64 array."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise BadShape(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DataError(f"{name} contains NaN or Inf")
    return A


def _round_robin(n: int):
    """Yield n-1 rounds of disjoint index pairs covering every pair once.

    ``n`` must be even; index ``n - 1`` may be a dummy the caller drops.
    """
    players = list(range(n))
    for _ in range(n - 1):
        half = n // 2
        yield [(min(players[i], players[n - 1 - i]), max(players[i], players[n - 1 - i]))
               for i in range(half)]
        players = [players[0], players[-1]] + players[1:-1]


def sym_eigen(A, max_sweeps: int = 100, tol: float = 1e-12) -> EigenResult:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Each sweep visits every off-diagonal pair once; pairs are grouped in
    round-robin order so that the rotations of one round act on disjoint
    planes and can be applied together.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric matrix.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`NoConvergence`.
    tol : float
        Stop once the off-diagonal Frobenius norm is at most
        ``tol * ||A||_F``.

    Returns
    -------
    EigenResult
        Eigenvalues in descending order and the matching eigenvectors as
        columns.  Eigenvalues whose magnitude is below
        ``1e-12 * sum(|eigenvalues|)`` are set to exactly zero.
    """
    A = as_matrix(A, "A")
    n, m = A.shape
    if n != m:
        raise BadShape(f"sym_eigen needs a square matrix, got {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-9 * scale:
        raise NonSymmetric("matrix is not symmetric within 1e-9 * max|A|")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n == 0:
        return EigenResult(np.zeros(0), V)

    norm_f = np.linalg.norm(A)
    threshold = tol * norm_f
    n_even = n + (n % 2)
    rounds = []
    for pairs in _round_robin(n_even):
        pairs = [(p, q) for p, q in pairs if q < n]
        if pairs:
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))

    def off_norm(M):
        off = M.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    converged = off_norm(A) <= threshold
    sweeps = 0
    while not converged:
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            app = A[p, p]
            aqq = A[q, q]
            theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J, columns then rows
            Ap = A[:, p].copy()
            Aq = A[:, q]
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap = A[p, :].copy()
            Aq = A[q, :]
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp = V[:, p].copy()
            Vq = V[:, q]
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
        sweeps += 1
        converged = off_norm(A) <= threshold

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    w[np.abs(w) < 1e-12 * np.sum(np.abs(w))] = 0.0
    return EigenResult(w, V)


def standardize(X):
    """Center columns and scale them to unit sample standard deviation.

    Columns whose std is below 1e-12 are only centered and report std 1.
    Returns ``(Xs, means, stds)``.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise TooFewRows(f"standardize needs at least 2 rows, got {n}")
    means = X.mean(axis=0)
    Xc = X - means
    stds = Xc.std(axis=0, ddof=1)
    stds = np.where(stds < 1e-12, 1.0, stds)
    return Xc / stds, means, stds


def covariance(X) -> np.ndarray:
    """Sample covariance ``X^T X / (n - 1)`` of already centered data."""
    X = as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise TooFewRows(f"covariance needs at least 2 rows, got {n}")
    C = X.T @ X / (n - 1)
    return 0.5 * (C + C.T)
