import csv
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featureopt import pca
from featureopt.dataset import builtin_path, load_builtin
from featureopt.errors import BadShape, BadThreshold, KTooLarge, TooFewRows
from featureopt.numerics import RandomStream


def _exact_covariance(rows):
    n, d = len(rows), len(rows[0])
    means = [sum(r[j] for r in rows) / n for j in range(d)]
    return [[sum((r[i] - means[i]) * (r[j] - means[j]) for r in rows) / (n - 1)
             for j in range(d)] for i in range(d)]


def _char_poly(A):
    """Characteristic polynomial coefficients (highest power first) by Faddeev-LeVerrier."""
    n = len(A)
    identity = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    M = [[Fraction(0)] * n for _ in range(n)]
    coeffs = [Fraction(1)]
    for k in range(1, n + 1):
        AM = [[sum(A[i][t] * M[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        M = [[AM[i][j] + coeffs[-1] * identity[i][j] for j in range(n)] for i in range(n)]
        AM = [[sum(A[i][t] * M[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs.append(-sum(AM[i][i] for i in range(n)) / k)
    return coeffs


def _k_from_sorted(values, threshold):
    values = sorted(values, reverse=True)
    total = sum(values)
    running = 0
    for k, v in enumerate(values, start=1):
        running += v
        if running / total >= threshold:
            return k
    return len(values)


def test_components_for_variance_arithmetic():
    assert pca.components_for_variance([4, 3, 2, 1], 0.6) == 2
    assert pca.components_for_variance([4, 3, 2, 1], 0.4) == 1
    assert pca.components_for_variance([4, 3, 0, 0], 1.0) == 2
    assert pca.components_for_variance([5, 1, 1e-3], 1.0) == 3
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(BadThreshold):
            pca.components_for_variance([1, 0.5], bad)


def test_iris_k_matches_characteristic_polynomial_oracle():
    with open(builtin_path("iris"), newline="") as fh:
        rows = [[Fraction(row[c]) for c in ("sepal_length", "sepal_width", "petal_length", "petal_width")]
                for row in csv.DictReader(fh)]
    coeffs = _char_poly(_exact_covariance(rows))
    mpmath.mp.dps = 50
    roots = mpmath.polyroots([mpmath.mpf(c.numerator) / c.denominator for c in coeffs],
                             maxsteps=200, extraprec=200)
    eigen = sorted((float(mpmath.re(r)) for r in roots), reverse=True)
    expected_k = _k_from_sorted(eigen, 0.95)
    model = pca.fit(load_builtin("iris").X, variance=0.95)
    assert model.k == expected_k == 2
    assert np.allclose(model.spectrum, eigen, rtol=1e-10, atol=1e-12)
    assert model.explained_variance_ratio[0] == pytest.approx(0.9246, abs=1e-4)


def test_heart_k_matches_extended_precision_oracle():
    X = load_builtin("heart").X
    rows = [[Fraction(float(v)) for v in r] for r in X]
    C = _exact_covariance(rows)
    mpmath.mp.dps = 40
    A = mpmath.matrix([[mpmath.mpf(c.numerator) / c.denominator for c in r] for r in C])
    eigen = sorted((float(mpmath.re(e)) for e in mpmath.eig(A, left=False, right=False)), reverse=True)
    expected_k = _k_from_sorted(eigen, 0.95)
    # eigenvalues majorize the diagonal, so sorted per-feature variances never need fewer terms
    diag_k = _k_from_sorted([float(C[i][i]) for i in range(len(C))], 0.95)
    assert expected_k <= diag_k
    model = pca.fit(X, variance=0.95)
    assert model.k == expected_k
    assert model.cumulative_ratio >= 0.95
    assert np.allclose(model.spectrum, eigen, rtol=1e-9, atol=1e-9)


def test_rank_one_line():
    t = np.linspace(-2, 3, 11)
    X = np.column_stack([t, 2 * t + 1])
    model = pca.fit(X, k=1)
    assert model.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(model.spectrum[1]) <= 1e-10
    assert pca.fit(X, variance=0.99).k == 1


def test_iris_full_basis():
    X = load_builtin("iris").X
    model = pca.fit(X, k=4)
    assert model.explained_variance.sum() == pytest.approx(model.total_variance, abs=1e-8)
    assert model.cumulative_ratio == pytest.approx(1.0, abs=1e-8)
    Z = pca.transform(model, X)
    assert np.abs(pca.inverse_transform(model, Z) - X).max() < 1e-6
    C = np.cov(Z, rowvar=False)
    assert np.abs(C - np.diag(np.diag(C))).max() < 1e-8
    assert np.abs(Z.var(axis=0, ddof=1) - model.explained_variance).max() < 1e-8


def test_mean_row_and_zero_scores():
    X = load_builtin("iris").X
    model = pca.fit(X, k=2, scale_inputs=True)
    assert np.abs(pca.transform(model, X.mean(axis=0)[None, :])).max() < 1e-10
    assert np.allclose(pca.inverse_transform(model, np.zeros((1, 2)))[0], model.mean, atol=0)


def test_reconstruction_error_non_increasing_in_k():
    X = load_builtin("iris").X
    errors = []
    for k in range(1, 5):
        model = pca.fit(X, k=k)
        errors.append(np.linalg.norm(X - pca.inverse_transform(model, pca.transform(model, X))))
    assert all(a >= b for a, b in zip(errors, errors[1:]))


def test_projection_beats_random_rank_two_projections():
    X = RandomStream(11, 0).normal(150).reshape(30, 5) * np.array([3.0, 2.0, 1.0, 0.5, 0.2])
    model = pca.fit(X, k=2)
    best = np.linalg.norm(X - pca.inverse_transform(model, pca.transform(model, X)))
    Xc = X - X.mean(axis=0)
    rng = RandomStream(11, 1)
    for _ in range(200):
        Q, _ = np.linalg.qr(rng.normal(10).reshape(5, 2))
        assert best <= np.linalg.norm(Xc - Xc @ Q @ Q.T) + 1e-12


def test_sign_rule_and_repeatability():
    X = load_builtin("heart").X
    a = pca.fit(X, k=5, scale_inputs=True)
    b = pca.fit(X, k=5, scale_inputs=True)
    assert np.array_equal(a.components, b.components)
    cols = np.arange(a.k)
    assert (a.components[np.abs(a.components).argmax(axis=0), cols] > 0).all()


def test_scaled_fit_uses_unit_variance_columns():
    X = load_builtin("heart").X
    model = pca.fit(X, variance=1.0, scale_inputs=True)
    assert model.total_variance == pytest.approx(X.shape[1], abs=1e-9)
    assert np.allclose(model.scale, X.std(axis=0, ddof=1))


def test_wide_data_uses_gram_path():
    X = RandomStream(5, 0).normal(8 * 20).reshape(8, 20)
    model = pca.fit(X, k=7)
    assert np.abs(model.components.T @ model.components - np.eye(7)).max() < 1e-8
    Xc = X - X.mean(axis=0)
    reference = np.sort(np.linalg.eigvalsh(np.cov(Xc, rowvar=False)))[::-1][:7]
    assert np.allclose(model.explained_variance, reference, rtol=1e-9)
    assert model.cumulative_ratio == pytest.approx(1.0, abs=1e-8)
    assert np.abs(pca.inverse_transform(model, pca.transform(model, X)) - X).max() < 1e-8


def test_errors():
    X = load_builtin("iris").X
    with pytest.raises(KTooLarge):
        pca.fit(X, k=5)
    with pytest.raises(KTooLarge):
        pca.fit(X[:3], k=3)
    with pytest.raises(TooFewRows):
        pca.fit(X[:1], k=1)
    with pytest.raises(BadThreshold):
        pca.fit(X, variance=1.2)
    model = pca.fit(X, k=2)
    with pytest.raises(BadShape):
        pca.transform(model, X[:, :3])
    with pytest.raises(BadShape):
        pca.inverse_transform(model, np.zeros((1, 3)))


def test_save_load_round_trip(tmp_path):
    X = load_builtin("heart").X
    model = pca.fit(X, variance=0.9, scale_inputs=True)
    pca.save(model, tmp_path / "p.txt")
    back = pca.load(tmp_path / "p.txt")
    assert back.k == model.k and back.total_variance == model.total_variance
    assert np.array_equal(back.components, model.components)
    assert np.array_equal(pca.transform(back, X), pca.transform(model, X))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 25), st.integers(1, 6), st.integers(0, 2**32), st.booleans())
def test_fit_invariants_property(n, d, seed, scale):
    X = RandomStream(seed, 0).normal(n * d).reshape(n, d) * (1 + np.arange(d))
    k = min(n - 1, d)
    model = pca.fit(X, k=k, scale_inputs=scale)
    V = model.components
    assert np.abs(V.T @ V - np.eye(k)).max() < 1e-8
    assert np.all(np.diff(model.explained_variance) <= 1e-12)
    assert np.all(model.explained_variance >= 0)
    assert model.explained_variance.sum() <= model.total_variance + 1e-8
    Z = pca.transform(model, X)
    again = pca.transform(model, pca.inverse_transform(model, Z))
    assert np.abs(again - Z).max() < 1e-8
