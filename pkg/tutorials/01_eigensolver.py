"""
Jacobi eigendecomposition of a covariance matrix
================================================

Decompose the iris covariance with the cyclic Jacobi solver and check the
result against the defining identities.
"""
import numpy as np

from featureopt.dataset import load_builtin
from featureopt.numerics import covariance, sym_eigen

X = load_builtin("iris").X
C = covariance(X - X.mean(axis=0))
eig = sym_eigen(C)

print("eigenvalues:", np.round(eig.eigenvalues, 4))

# A v = lambda v for every pair, and V is orthogonal
V, w = eig.eigenvectors, eig.eigenvalues
print("max |Av - lv| :", np.abs(C @ V - V * w).max())
print("max |V'V - I| :", np.abs(V.T @ V - np.eye(4)).max())

# the eigenvalues carry the total variance
print("trace vs sum  :", np.trace(C), w.sum())
