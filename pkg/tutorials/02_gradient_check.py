"""
Checking backpropagation against finite differences
===================================================

A tiny 2-4-3 tanh network is small enough to perturb every parameter one at
a time and compare the central difference with the analytic gradient.
"""
import numpy as np

from featureopt import mlp
from featureopt.numerics import RandomStream

cfg = mlp.MlpConfig(hidden_sizes=(4,), activation="tanh", l2_penalty=0.01, seed=3)
model = mlp.init(2, 3, cfg)
rng = RandomStream(3, 1)
X = rng.normal(10).reshape(5, 2)
y = rng.integers(3, 5)

loss, gW, gb = mlp.loss_and_grad(model, X, y)
print(f"loss {loss:.6f}")

h = 1e-5
W = [w.copy() for w in model.weights]


def loss_with(W):
    m = mlp.MlpModel(tuple(W), model.biases, cfg, 2, 3)
    return mlp.loss_and_grad(m, X, y)[0]


worst = 0.0
for layer, g in enumerate(gW):
    for idx in np.ndindex(g.shape):
        W[layer][idx] += h
        up = loss_with(W)
        W[layer][idx] -= 2 * h
        down = loss_with(W)
        W[layer][idx] += h
        numeric = (up - down) / (2 * h)
        worst = max(worst, abs(numeric - g[idx]) / max(abs(numeric) + abs(g[idx]), 1e-12))

print(f"worst relative error over all weights: {worst:.2e}")
