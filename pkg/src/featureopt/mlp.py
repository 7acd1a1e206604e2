"""Multilayer perceptron classifier written directly in numpy.

Softmax output, mean cross-entropy plus an L2 penalty on the weights,
backpropagation, and mini-batch Adam.  ``MlpConfig()`` is the "default
parameters" profile used throughout the experiments.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import textio
from .dataset import Dataset, FoldAssignment
from .errors import BadConfig, BadShape, SingleClass
from .numerics import RandomStream, as_matrix, derive_seed

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpConfig:
    hidden_sizes: tuple = (100,)
    activation: str = "relu"
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    l2_penalty: float = 1e-4
    batch_size: int | None = None  # None -> min(200, n)
    max_epochs: int = 200
    early_stop_tol: float = 1e-4
    early_stop_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.activation not in ACTIVATIONS:
            raise BadConfig(f"activation must be one of {ACTIVATIONS}")
        if any(h < 1 for h in self.hidden_sizes):
            raise BadConfig("hidden sizes must be >= 1")
        if min(self.learning_rate, self.adam_eps, self.l2_penalty, self.early_stop_tol) < 0:
            raise BadConfig("rates and penalties must be >= 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise BadConfig("adam betas must lie in [0, 1)")
        if self.batch_size is not None and self.batch_size < 1:
            raise BadConfig("batch_size must be >= 1")
        if self.max_epochs < 1 or self.early_stop_patience < 1:
            raise BadConfig("max_epochs and early_stop_patience must be >= 1")

    def replace(self, **changes) -> "MlpConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d


@dataclass(frozen=True)
class MlpModel:
    weights: tuple
    biases: tuple
    config: MlpConfig
    input_dim: int
    class_count: int

    @property
    def layer_sizes(self):
        return (self.input_dim, *self.config.hidden_sizes, self.class_count)


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    stopped_epoch: int = 0


def init(input_dim: int, class_count: int, cfg: MlpConfig = MlpConfig()) -> MlpModel:
    """Glorot-uniform weights from ``RandomStream(cfg.seed, 0)``, zero biases."""
    if input_dim < 1 or class_count < 1:
        raise BadShape(f"bad network dims input={input_dim}, classes={class_count}")
    sizes = (input_dim, *cfg.hidden_sizes, class_count)
    rng = RandomStream(cfg.seed, 0)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append((2.0 * rng.uniform(fan_in * fan_out) - 1.0).reshape(fan_in, fan_out) * bound)
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(weights), tuple(biases), cfg, input_dim, class_count)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(z, a, kind):
    if kind == "relu":
        return (z > 0).astype(np.float64)
    return 1.0 - a * a


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _check_input(model, X):
    X = as_matrix(X)
    if X.shape[1] != model.input_dim:
        raise BadShape(f"X has {X.shape[1]} columns, model expects {model.input_dim}")
    return X


def _forward_cache(model, X):
    zs, activations = [], [X]
    a = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        zs.append(z)
        a = z if i == last else _activate(z, model.config.activation)
        activations.append(a)
    return zs, activations


def logits(model: MlpModel, X) -> np.ndarray:
    X = _check_input(model, X)
    return _forward_cache(model, X)[1][-1]


def forward(model: MlpModel, X) -> np.ndarray:
    """Class probabilities, one softmax row per sample."""
    return np.exp(_log_softmax(logits(model, X)))


def _loss_and_grad(weights, biases, X, y, activation, l2):
    n = X.shape[0]
    acts, zs = [X], []
    a = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        zs.append(z)
        a = z if i == last else _activate(z, activation)
        acts.append(a)
    logp = _log_softmax(a)
    rows = np.arange(n)
    loss = -logp[rows, y].mean()
    if l2:
        loss += l2 / (2 * n) * sum(float(np.vdot(W, W)) for W in weights)

    delta = np.exp(logp)
    delta[rows, y] -= 1.0
    delta /= n
    gW = [None] * len(weights)
    gb = [None] * len(weights)
    for i in range(last, -1, -1):
        gW[i] = acts[i].T @ delta
        if l2:
            gW[i] += (l2 / n) * weights[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * _activation_grad(zs[i - 1], acts[i], activation)
    return float(loss), gW, gb


def loss_and_grad(model: MlpModel, X, y):
    """Mean cross-entropy plus ``l2/(2n) * sum ||W||^2`` and its gradients.

    Returns ``(loss, weight_grads, bias_grads)``; the gradient tuples line
    up with ``model.weights`` and ``model.biases``.
    """
    X = _check_input(model, X)
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (X.shape[0],):
        raise BadShape("y length does not match X rows")
    if y.size and (y.min() < 0 or y.max() >= model.class_count):
        raise BadShape("labels outside 0..class_count-1")
    loss, gW, gb = _loss_and_grad(model.weights, model.biases, X, y,
                                  model.config.activation, model.config.l2_penalty)
    return loss, tuple(gW), tuple(gb)


def _predict_raw(weights, biases, X, activation):
    a = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        a = a @ W + b
        if i != last:
            a = _activate(a, activation)
    return np.argmax(a, axis=1)


def predict(model: MlpModel, X) -> np.ndarray:
    """Argmax class; ``np.argmax`` already resolves ties to the lowest index."""
    return np.argmax(logits(model, X), axis=1)


def accuracy(model: MlpModel, X, y) -> float:
    y = np.asarray(y)
    pred = predict(model, X)
    if pred.shape != y.shape:
        raise BadShape("y length does not match X rows")
    return float(np.mean(pred == y))


def train(ds: Dataset, cfg: MlpConfig = MlpConfig(), track_accuracy: bool = True):
    """Fit an MLP with mini-batch Adam.

    Epoch ``e`` shuffles with ``RandomStream(cfg.seed, e + 1)``.  Training
    stops after ``max_epochs`` or once the epoch loss has failed to drop by
    ``early_stop_tol`` below the best loss for ``early_stop_patience``
    epochs in a row.  ``track_accuracy=False`` skips the per-epoch
    training-accuracy pass and leaves ``history.accuracy`` empty.
    """
    X, y = ds.X, ds.y
    if np.unique(y).size < 2:
        raise SingleClass("training data contains a single class")
    n = X.shape[0]
    model = init(X.shape[1], ds.n_classes, cfg)
    params = [w.copy() for w in model.weights] + [b.copy() for b in model.biases]
    n_layers = len(model.weights)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    batch = min(cfg.batch_size or 200, n)
    step = 0
    best_loss = np.inf
    no_improve = 0
    history = TrainHistory()

    weights, biases = params[:n_layers], params[n_layers:]
    for epoch in range(cfg.max_epochs):
        order = RandomStream(cfg.seed, epoch + 1).permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            loss, gW, gb = _loss_and_grad(weights, biases, X[idx], y[idx],
                                          cfg.activation, cfg.l2_penalty)
            epoch_loss += loss * idx.size
            step += 1
            lr = cfg.learning_rate * np.sqrt(1 - b2 ** step) / (1 - b1 ** step)
            for p, g, mi, vi in zip(params, gW + gb, m, v):
                mi *= b1
                mi += (1 - b1) * g
                vi *= b2
                vi += (1 - b2) * (g * g)
                p -= lr * mi / (np.sqrt(vi) + cfg.adam_eps)
        epoch_loss /= n
        history.loss.append(epoch_loss)
        if track_accuracy:
            history.accuracy.append(float(np.mean(_predict_raw(weights, biases, X, cfg.activation) == y)))
        history.stopped_epoch = epoch + 1

        if epoch_loss > best_loss - cfg.early_stop_tol:
            no_improve += 1
        else:
            no_improve = 0
        best_loss = min(best_loss, epoch_loss)
        if no_improve >= cfg.early_stop_patience:
            break

    for p in params:
        p.flags.writeable = False
    model = MlpModel(tuple(weights), tuple(biases), cfg, model.input_dim, model.class_count)
    return model, history


def cv_accuracy(ds: Dataset, folds: FoldAssignment, cfg: MlpConfig = MlpConfig()):
    """Mean and per-fold held-out accuracy; fold ``f`` trains with seed ``(cfg.seed, f)``."""
    if folds.fold_of.shape[0] != ds.n_samples:
        raise BadShape("fold assignment does not match the dataset")
    scores = []
    for f, (train_idx, test_idx) in enumerate(folds.splits()):
        train_ds = ds.subset(train_idx)
        model, _ = train(train_ds, cfg.replace(seed=derive_seed(cfg.seed, f)), track_accuracy=False)
        # subset() relabels only when a class is missing from the training folds
        label_map = np.unique(ds.y[train_idx])
        pred = label_map[predict(model, ds.X[test_idx])]
        scores.append(float(np.mean(pred == ds.y[test_idx])))
    return float(np.mean(scores)), scores


def save(model: MlpModel, path) -> None:
    arrays = []
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        arrays += [(f"W{i}", W), (f"b{i}", b)]
    meta = {"input_dim": model.input_dim, "class_count": model.class_count,
            "layer_sizes": list(model.layer_sizes), "config": model.config.to_dict()}
    textio.dump(path, "mlp", meta, arrays)


def load(path) -> MlpModel:
    meta, arrays = textio.load(path, "mlp")
    cfg = MlpConfig(**meta["config"])
    n_layers = len(meta["layer_sizes"]) - 1
    weights = tuple(arrays[f"W{i}"] for i in range(n_layers))
    biases = tuple(arrays[f"b{i}"].ravel() for i in range(n_layers))
    return MlpModel(weights, biases, cfg, meta["input_dim"], meta["class_count"])
