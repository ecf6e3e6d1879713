"""Actor: policy network, order-preserving quantizers and the candidate-count rule."""

from __future__ import annotations

from collections import deque

import numpy as np

from .config import FrameInput

HIDDEN_LAYERS = (120, 80)
QUEUE_FEATURE_SCALE = 1e7
ENERGY_FEATURE_SCALE = 1e3


def sigmoid(z):
    # exp(-softplus(-z)) never overflows.
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=float)))


def softplus(z):
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def features(xi: FrameInput, ref_gain) -> np.ndarray:
    """Network input: gains relative to ``ref_gain`` (scalar or per WD), backlog / 1e7, energy queue / 1e3.

    Stable backlogs sit around 1e7 bits per WD, so all three groups stay O(1).
    """
    return np.concatenate(
        (xi.channel / ref_gain, xi.data_queue / QUEUE_FEATURE_SCALE, xi.energy_queue / ENERGY_FEATURE_SCALE)
    )


class PolicyNetwork:
    """Fully connected 3N -> 120 -> 80 -> N network, ReLU hidden units, sigmoid output.

    Weights are stored as (fan_out, fan_in) matrices. ``scaled_init`` draws
    every parameter from N(0, 1/fan_in); without it parameters are plain
    standard normal.
    """

    def __init__(self, n_wd: int, rng: np.random.Generator, hidden=HIDDEN_LAYERS, scaled_init: bool = True):
        self.n_wd = n_wd
        self.sizes = (3 * n_wd, *hidden, n_wd)
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in) if scaled_init else 1.0
            self.params.append(rng.standard_normal((fan_out, fan_in)) * scale)
            self.params.append(rng.standard_normal(fan_out) * scale)

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "PolicyNetwork":
        clone = object.__new__(PolicyNetwork)
        clone.n_wd = self.n_wd
        clone.sizes = self.sizes
        clone.params = [p.copy() for p in self.params]
        return clone

    def logits(self, X):
        a = np.asarray(X, dtype=float)
        n_layers = len(self.params) // 2
        for k in range(n_layers):
            W, b = self.params[2 * k], self.params[2 * k + 1]
            a = a @ W.T + b
            if k < n_layers - 1:
                a = np.maximum(a, 0.0)
        return a

    def forward(self, X) -> np.ndarray:
        """Relaxed action in (0, 1)^N for one feature vector or a batch of rows."""
        return sigmoid(self.logits(X))

    def loss_and_grad(self, X, labels):
        """Mean-over-batch, sum-over-outputs binary cross-entropy and its gradient."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        labels = np.atleast_2d(np.asarray(labels, dtype=float))
        batch = X.shape[0]
        n_layers = len(self.params) // 2
        acts = [X]
        a = X
        for k in range(n_layers):
            W, b = self.params[2 * k], self.params[2 * k + 1]
            a = a @ W.T + b
            if k < n_layers - 1:
                a = np.maximum(a, 0.0)
            acts.append(a)
        z = acts[-1]
        # -[y log s(z) + (1-y) log(1-s(z))] = y softplus(-z) + (1-y) softplus(z)
        loss = float(np.sum(labels * softplus(-z) + (1.0 - labels) * softplus(z)) / batch)
        delta = (sigmoid(z) - labels) / batch
        grads = [None] * len(self.params)
        for k in range(n_layers - 1, -1, -1):
            grads[2 * k] = delta.T @ acts[k]
            grads[2 * k + 1] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.params[2 * k]) * (acts[k] > 0)
        return loss, grads

    def to_flat(self) -> np.ndarray:
        """Layer 1 weights (row-major), layer 1 biases, layer 2 weights, ..."""
        return np.concatenate([p.ravel() for p in self.params])

    def load_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {flat.size}")
        pos = 0
        for k, p in enumerate(self.params):
            self.params[k] = flat[pos:pos + p.size].reshape(p.shape).copy()
            pos += p.size


def cross_entropy(xhat, labels, eps: float = 1e-12) -> float:
    """Batch-mean binary cross-entropy of probabilities ``xhat`` against binary labels."""
    xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    terms = labels * np.log(np.maximum(xhat, eps)) + (1.0 - labels) * np.log(np.maximum(1.0 - xhat, eps))
    return float(-terms.sum() / xhat.shape[0])


def opq_quantize(xhat, count: int) -> np.ndarray:
    """``count`` binary candidates from relaxed action ``xhat`` (order-preserving).

    Candidate 1 thresholds at 0.5. Candidate k >= 2 thresholds at the entry
    ranked k-1 by closeness to 0.5: x_i = 1 iff xhat_i > y, or xhat_i == y
    and y <= 0.5.
    """
    xhat = np.asarray(xhat, dtype=float)
    n = xhat.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"candidate count must be in [1, {n}], got {count}")
    out = np.empty((count, n), dtype=np.int8)
    out[0] = xhat > 0.5
    if count > 1:
        order = np.argsort(np.abs(xhat - 0.5), kind="stable")
        y = xhat[order[:count - 1]][:, None]
        out[1:] = (xhat > y) | ((xhat == y) & (y <= 0.5))
    return out


def nop_candidates(xhat, count: int, rng: np.random.Generator) -> np.ndarray:
    """Noisy order-preserving candidates: ``count`` rows, half from ``xhat``, half from sigmoid(xhat + n)."""
    if count % 2:
        raise ValueError("candidate count must be even")
    half = count // 2
    xhat = np.asarray(xhat, dtype=float)
    noisy = sigmoid(xhat + rng.standard_normal(xhat.shape[0]))
    return np.vstack((opq_quantize(xhat, half), opq_quantize(noisy, half)))


class QuantizerState:
    """Adaptive candidate count: starts at 2N, recomputed every ``interval`` frames."""

    def __init__(self, n_wd: int, interval: int = 32):
        if interval < 1:
            raise ValueError("interval must be >= 1")
        self.n_wd = n_wd
        self.interval = interval
        self.count = 2 * n_wd
        self.history: deque[int] = deque(maxlen=interval)

    def record(self, best_order: int) -> None:
        self.history.append(int(best_order))


def update_candidate_count(history, n_wd: int) -> int:
    """2 * min(max(recent best orders) + 1, N)."""
    return 2 * min(max(history) + 1, n_wd)


def update_Mt(state: QuantizerState) -> int:
    if state.history:
        state.count = update_candidate_count(state.history, state.n_wd)
    assert state.count % 2 == 0 and 2 <= state.count <= 2 * state.n_wd
    return state.count
