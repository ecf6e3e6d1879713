"""Per-frame computation/transmission physics and the queue recursions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import TOL, ResourceAllocation, SystemConfig


class CausalityError(RuntimeError):
    """More bits were processed than were queued."""


@dataclass(frozen=True, eq=False)
class QueueState:
    data_queue: np.ndarray
    energy_queue: np.ndarray

    def __post_init__(self):
        for name in ("data_queue", "energy_queue"):
            arr = np.array(getattr(self, name), dtype=float)
            if np.any(arr < 0):
                raise ValueError(f"{name} must be non-negative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def initial(cls, n: int) -> "QueueState":
        return cls(np.zeros(n), np.zeros(n))


def local_bits_energy(f, cfg: SystemConfig):
    """Bits computed and joules spent in one frame at CPU frequency ``f``."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("CPU frequency must be non-negative")
    T = cfg.frame_duration
    bits = f * T / cfg.cycles_per_bit
    energy = cfg.energy_efficiency * f**3 * T
    if bits.ndim == 0:
        return float(bits), float(energy)
    return bits, energy


def offload_bits(tau: float, e: float, h: float, cfg: SystemConfig) -> float:
    """Bits delivered to the edge server with airtime ``tau`` and energy ``e``.

    ``tau = 0`` delivers nothing; spending energy without airtime is rejected.
    """
    if tau < 0 or e < 0:
        raise ValueError("tau and e must be non-negative")
    if tau == 0:
        if e > 0:
            raise ValueError("positive offloading energy with zero airtime")
        return 0.0
    T = cfg.frame_duration
    snr = e * h / (tau * T * cfg.noise_power)
    return cfg.bandwidth * tau * T / cfg.rate_overhead * math.log2(1.0 + snr)


def frame_rate_energy(x, y: ResourceAllocation, h, cfg: SystemConfig):
    """Computation rate (bit/s) and power (W) of every WD for one frame."""
    x = np.asarray(x)
    n = x.shape[0]
    rate = np.zeros(n)
    power = np.zeros(n)
    T = cfg.frame_duration
    for i in range(n):
        if x[i]:
            rate[i] = offload_bits(y.tau[i], y.offload_energy[i], h[i], cfg) / T
            power[i] = y.offload_energy[i] / T
        else:
            bits, joules = local_bits_energy(y.cpu[i], cfg)
            rate[i] = bits / T
            power[i] = joules / T
    return rate, power


def update_queues(state: QueueState, processed, power, arrivals, cfg: SystemConfig, tol: float = TOL) -> QueueState:
    """Advance both queues by one frame.

    Raises CausalityError if ``processed`` exceeds the backlog by more than
    the relative tolerance: that always means an allocator bug.
    """
    Q = state.data_queue
    processed = np.asarray(processed, dtype=float)
    excess = processed - Q
    if np.any(excess > tol * (1.0 + Q)):
        i = int(np.argmax(excess))
        raise CausalityError(f"WD {i}: processed {processed[i]!r} bits with backlog {Q[i]!r}")
    # Sub-tolerance overshoot is rounding, not data.
    drained = np.maximum(Q - processed, 0.0)
    nu = cfg.energy_queue_scale
    Y = np.maximum(state.energy_queue + nu * np.asarray(power) - nu * cfg.power_thresholds, 0.0)
    return QueueState(drained + np.asarray(arrivals, dtype=float), Y)


def objective_coefficients(state: QueueState, cfg: SystemConfig):
    """Backlog-plus-weight coefficients ``a`` and the energy prices ``Y``."""
    a = state.data_queue / cfg.data_unit + cfg.lyapunov_v * cfg.weights
    return a, state.energy_queue


def per_frame_objective(x, y: ResourceAllocation, state: QueueState, h, cfg: SystemConfig) -> float:
    """Drift-plus-penalty score sum(a * r) - sum(Y * e), rates in data units."""
    a, Y = objective_coefficients(state, cfg)
    rate, power = frame_rate_energy(x, y, h, cfg)
    return float(np.dot(a, rate / cfg.data_unit) - np.dot(Y, power))
