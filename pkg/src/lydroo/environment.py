"""Block-fading channels and exponential task arrivals."""

from __future__ import annotations

import math

import numpy as np

from .config import SystemConfig

ANTENNA_GAIN = 3.0
CARRIER_HZ = 915e6
PATH_LOSS_EXPONENT = 3.0
LIGHT_SPEED = 3e8
LOS_FRACTION = 0.3

# Independent sub-streams spawned from one root seed.
STREAM_CHANNEL = 0
STREAM_ARRIVAL = 1
STREAM_DNN_INIT = 2
STREAM_QUANTIZER = 3
STREAM_REPLAY = 4
_N_STREAMS = 5


def substreams(seed: int) -> list[np.random.Generator]:
    """One generator per consumer, all derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(_N_STREAMS)
    return [np.random.default_rng(c) for c in children]


def mean_gain(distance: float | np.ndarray) -> float | np.ndarray:
    """Average channel gain of a WD at ``distance`` meters (path-loss model)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("distance must be positive and finite")
    g = ANTENNA_GAIN * (LIGHT_SPEED / (4.0 * math.pi * CARRIER_HZ * d)) ** PATH_LOSS_EXPONENT
    return float(g) if g.ndim == 0 else g


def rician_fading(rng: np.random.Generator, n: int, los_fraction: float = LOS_FRACTION) -> np.ndarray:
    """Unit-mean Rician power gains |sqrt(K) + sqrt(1-K) z|^2, z ~ CN(0, 1)."""
    scatter = math.sqrt((1.0 - los_fraction) / 2.0)
    re = math.sqrt(los_fraction) + scatter * rng.standard_normal(n)
    im = scatter * rng.standard_normal(n)
    return re * re + im * im


class Environment:
    """Exogenous processes of one simulation replica.

    The (channel, arrival) stream is a pure function of ``(seed, cfg)``;
    each process draws from its own generator so that consuming one never
    shifts the other.
    """

    def __init__(self, cfg: SystemConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        streams = substreams(seed)
        self._channel_rng = streams[STREAM_CHANNEL]
        self._arrival_rng = streams[STREAM_ARRIVAL]
        self.mean_gain = mean_gain(cfg.distances)

    def sample_channels(self) -> np.ndarray:
        g = rician_fading(self._channel_rng, self.cfg.n_wd)
        # A zero draw has probability zero but would break the log-rate model.
        return self.mean_gain * np.maximum(g, np.finfo(float).tiny)

    def sample_arrivals(self) -> np.ndarray:
        return self._arrival_rng.exponential(self.cfg.arrival_means)
