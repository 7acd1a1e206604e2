"""
How many components does iris need?
===================================

Fit PCA with and without standardizing the columns and look at how quickly
the cumulative explained variance reaches 95%.
"""
import numpy as np

from featureopt import pca
from featureopt.dataset import load_builtin

ds = load_builtin("iris")

for scale in (False, True):
    model = pca.fit(ds.X, variance=0.95, scale_inputs=scale)
    ratios = model.spectrum / model.total_variance
    print(f"scale_inputs={scale}")
    print("  variance ratios :", np.round(ratios, 4))
    print("  cumulative      :", np.round(np.cumsum(ratios), 4))
    print(f"  k for 95%       : {model.k}")

# reconstruction error shrinks as components are added
for k in range(1, 5):
    m = pca.fit(ds.X, k=k)
    Xr = pca.inverse_transform(m, pca.transform(m, ds.X))
    print(f"k={k}  ||X - Xr||_F = {np.linalg.norm(ds.X - Xr):.4f}")
