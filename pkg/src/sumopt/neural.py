"""From-scratch multilayer perceptron: ELU hidden layers, identity output,
softmax cross-entropy, and manual backpropagation over one flat parameter
vector. A thin adapter presents mini-batch training as a gradient oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Every run shares the same evaluation subset so checkpoint curves are
# comparable across seeds.
EVAL_SUBSET_SEED = 2048
EVAL_SUBSET_SIZE = 2048
_LOSS_CHUNK = 8192


def elu(z):
    """z for z >= 0, exp(z)-1 below; unit scale."""
    z = np.asarray(z, dtype=np.float64)
    out = np.where(z >= 0.0, z, np.expm1(np.minimum(z, 0.0)))
    return float(out) if out.ndim == 0 else out


def elu_prime(z):
    """1 for z >= 0, exp(z) below (right-continuous at zero)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.where(z >= 0.0, 1.0, np.exp(np.minimum(z, 0.0)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BatchLossGrad:
    loss: float
    grad: np.ndarray


class MlpModel:
    """Fully connected net; weights and biases live in one flat vector.

    Layout per layer: the (d_in x d_out) weight block row-major, then the
    bias block. Initialization is uniform on +-sqrt(6/(d_in+d_out)) with
    zero biases, drawn from the given seed.
    """

    def __init__(self, layer_dims, seed: int = 0):
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError(f"layer_dims needs >= 2 positive entries, got {layer_dims!r}")
        self.layer_dims = dims
        self._shapes = list(zip(dims[:-1], dims[1:]))
        self.n_params = sum(din * dout + dout for din, dout in self._shapes)
        self.n_classes = dims[-1]
        self.params = self.init_params(np.random.default_rng(seed))

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        theta = np.empty(self.n_params)
        off = 0
        for din, dout in self._shapes:
            lim = math.sqrt(6.0 / (din + dout))
            theta[off:off + din * dout] = rng.uniform(-lim, lim, din * dout)
            off += din * dout
            theta[off:off + dout] = 0.0
            off += dout
        return theta

    def unflatten(self, theta=None) -> list:
        theta = self.params if theta is None else np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_params,):
            raise ValueError(f"parameter vector must have shape ({self.n_params},), got {theta.shape}")
        layers = []
        off = 0
        for din, dout in self._shapes:
            W = theta[off:off + din * dout].reshape(din, dout)
            off += din * dout
            b = theta[off:off + dout]
            off += dout
            layers.append((W, b))
        return layers

    def flatten(self, layers) -> np.ndarray:
        return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in layers])

    def _check_batch(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.layer_dims[0]:
            raise ValueError(f"inputs must be (n, {self.layer_dims[0]}), got {X.shape}")
        y = np.asarray(y)
        if y.shape != (X.shape[0],) or not np.issubdtype(y.dtype, np.integer):
            raise ValueError("labels must be an integer vector matching the batch")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")
        return X, y

    def _forward(self, X):
        layers = self.unflatten()
        pre = []
        acts = [X]
        A = X
        for W, b in layers[:-1]:
            Z = A @ W + b
            A = np.where(Z >= 0.0, Z, np.expm1(np.minimum(Z, 0.0)))
            pre.append(Z)
            acts.append(A)
        W, b = layers[-1]
        return layers, pre, acts, A @ W + b

    def logits(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._forward(X)[3]

    def forward_loss(self, X, y) -> float:
        X, y = self._check_batch(X, y)
        logits = self._forward(X)[3]
        return _cross_entropy(logits, y)

    def backward_grad(self, X, y) -> BatchLossGrad:
        X, y = self._check_batch(X, y)
        layers, pre, acts, logits = self._forward(X)
        n = X.shape[0]
        shifted = logits - logits.max(axis=1, keepdims=True)
        expz = np.exp(shifted)
        probs = expz / expz.sum(axis=1, keepdims=True)
        rows = np.arange(n)
        loss = float(np.mean(np.log(expz.sum(axis=1)) - shifted[rows, y]))

        delta = probs
        delta[rows, y] -= 1.0
        delta /= n  # gradient of the batch mean
        grads = [None] * len(layers)
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
            if li > 0:
                Z = pre[li - 1]
                dact = np.where(Z >= 0.0, 1.0, np.exp(np.minimum(Z, 0.0)))
                delta = (delta @ W.T) * dact
        return BatchLossGrad(loss=loss, grad=self.flatten(grads))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)


def _cross_entropy(logits, y) -> float:
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(lse - shifted[np.arange(len(y)), y]))


def forward_loss(model: MlpModel, batch_inputs, batch_labels) -> float:
    return model.forward_loss(batch_inputs, batch_labels)


def backward_grad(model: MlpModel, batch_inputs, batch_labels) -> BatchLossGrad:
    return model.backward_grad(batch_inputs, batch_labels)


def accuracy(model: MlpModel, inputs, labels, chunk: int = _LOSS_CHUNK) -> float:
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels)
    hits = 0
    for lo in range(0, len(labels), chunk):
        hits += int((model.predict(inputs[lo:lo + chunk]) == labels[lo:lo + chunk]).sum())
    return hits / len(labels)


class NeuralOracle:
    """Mini-batch gradient oracle over a fixed dataset.

    Batches are drawn uniformly with replacement by default, which makes
    the sampled gradient an exactly unbiased estimate of the full-dataset
    gradient. epoch_shuffle mode (a seeded permutation per epoch, short
    last batch included) matches common practice but is only approximately
    unbiased; "full" mode returns the deterministic full-dataset gradient.

    evaluate() reports the full training loss together with the gradient
    on the fixed evaluation subset (the full per-step gradient would be
    prohibitively expensive at this scale).
    """

    def __init__(self, model: MlpModel, dataset, batch_size: int, seed: int,
                 mode: str = "with_replacement"):
        if mode not in ("with_replacement", "epoch_shuffle", "full"):
            raise ValueError(f"unknown sampling mode {mode!r}")
        X = np.asarray(dataset.inputs, dtype=np.float64)
        y = np.asarray(dataset.labels)
        n = len(y)
        if n == 0:
            raise ValueError("dataset is empty")
        if mode == "full":
            batch_size = n
        if not 1 <= batch_size <= n:
            raise ValueError(f"batch_size must lie in [1, {n}], got {batch_size}")
        self.model = model
        self.X = X
        self.y = y
        self.n = n
        self.batch_size = int(batch_size)
        self.mode = mode
        self.dim = model.n_params
        self.metadata = None
        self.eval_every = -(-n // batch_size)  # steps per epoch
        self._rng = np.random.default_rng(seed)
        self._perm = None
        self._cursor = 0
        eval_n = min(EVAL_SUBSET_SIZE, n)
        idx = np.random.default_rng(EVAL_SUBSET_SEED).choice(n, size=eval_n, replace=False)
        idx.sort()
        self._eval_X = X[idx]
        self._eval_y = y[idx]

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return self.model.init_params(rng)

    def in_region(self, x) -> bool:
        return True

    def _next_indices(self, rng: np.random.Generator) -> np.ndarray:
        if self.mode == "with_replacement":
            return rng.integers(0, self.n, self.batch_size)
        if self._perm is None or self._cursor >= self.n:
            self._perm = rng.permutation(self.n)
            self._cursor = 0
        idx = self._perm[self._cursor:self._cursor + self.batch_size]
        self._cursor += self.batch_size
        return idx

    def sample(self, x, rng: np.random.Generator | None = None):
        rng = self._rng if rng is None else rng
        self.model.params = np.asarray(x, dtype=np.float64)
        if self.mode == "full":
            res = self.model.backward_grad(self.X, self.y)
        else:
            idx = self._next_indices(rng)
            res = self.model.backward_grad(self.X[idx], self.y[idx])
        return res.loss, res.grad

    def full_train_loss(self, x) -> float:
        self.model.params = np.asarray(x, dtype=np.float64)
        total = 0.0
        for lo in range(0, self.n, _LOSS_CHUNK):
            Xc = self.X[lo:lo + _LOSS_CHUNK]
            yc = self.y[lo:lo + _LOSS_CHUNK]
            total += self.model.forward_loss(Xc, yc) * len(yc)
        return total / self.n

    def evaluate(self, x):
        full_loss = self.full_train_loss(x)
        res = self.model.backward_grad(self._eval_X, self._eval_y)
        return full_loss, res.grad


def as_oracle(model: MlpModel, dataset, batch_size: int, seed: int,
              mode: str = "with_replacement") -> NeuralOracle:
    return NeuralOracle(model, dataset, batch_size, seed, mode=mode)
