"""Policy update: replay memory of (features, best action) pairs and periodic training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actor import PolicyNetwork


@dataclass(frozen=True)
class TrainerConfig:
    memory_capacity: int = 1024
    train_interval: int = 10
    batch_size: int = 32
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.memory_capacity < 2 or self.train_interval < 1 or self.batch_size < 1:
            raise ValueError("memory_capacity >= 2, train_interval >= 1 and batch_size >= 1 required")
        if self.batch_size > self.memory_capacity // 2 + 1:
            raise ValueError("batch_size cannot exceed the memory size at which training starts")

    @property
    def min_samples(self) -> int:
        return self.memory_capacity // 2


class ReplayMemory:
    """Ring buffer keeping only the most recent ``capacity`` samples."""

    def __init__(self, capacity: int, n_features: int, n_outputs: int):
        self.capacity = capacity
        self.features = np.zeros((capacity, n_features))
        self.labels = np.zeros((capacity, n_outputs), dtype=np.int8)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def store(self, features, label) -> None:
        label = np.asarray(label)
        if not np.all((label == 0) | (label == 1)):
            raise ValueError("labels must be binary")
        self.features[self.cursor] = features
        self.labels[self.cursor] = label
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def contents(self):
        """Stored pairs, oldest first."""
        if self.size < self.capacity:
            idx = np.arange(self.size)
        else:
            idx = (self.cursor + np.arange(self.capacity)) % self.capacity
        return self.features[idx], self.labels[idx]

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self.features[idx], self.labels[idx]


class Adam:
    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Trainer:
    """Bundles memory, optimizer state and the sampling stream of one learner."""

    def __init__(self, net: PolicyNetwork, tcfg: TrainerConfig, rng: np.random.Generator):
        self.tcfg = tcfg
        self.rng = rng
        self.memory = ReplayMemory(tcfg.memory_capacity, net.sizes[0], net.sizes[-1])
        self.optimizer = Adam(net.params, tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.adam_eps)

    def should_train(self, t: int) -> bool:
        return t % self.tcfg.train_interval == 0 and len(self.memory) > self.tcfg.min_samples

    def train_step(self, net: PolicyNetwork, X, labels) -> float:
        loss, grads = net.loss_and_grad(X, labels)
        self.optimizer.step(net.params, grads)
        return loss


def maybe_train(trainer: Trainer, net: PolicyNetwork, t: int):
    """One optimizer step on a uniform batch when frame ``t`` is a training frame.

    Returns ``(net, loss)`` with the loss measured before the step, or
    ``(net, None)`` when no training happens.
    """
    if not trainer.should_train(t):
        return net, None
    X, labels = trainer.memory.sample(trainer.tcfg.batch_size, trainer.rng)
    return net, trainer.train_step(net, X, labels)
