"""Shared value types for the offloading simulator.

Units are bits, seconds, watts, joules and Hz throughout. With the frame
length fixed at one second, per-frame totals (bits processed, joules spent)
and per-second averages (rates, powers) coincide numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np

TOL = 1e-9

# Thermal noise density used by the default network, dBm/Hz.
NOISE_PSD_DBM_HZ = -174.0


class ConfigError(ValueError):
    """A configuration value violates one of the model invariants."""


def noise_power_for(bandwidth: float, psd_dbm_hz: float = NOISE_PSD_DBM_HZ) -> float:
    """Receiver noise power in watts for a band of ``bandwidth`` Hz."""
    return bandwidth * 10.0 ** (psd_dbm_hz / 10.0) * 1e-3


@dataclass(frozen=True)
class WdProfile:
    weight: float
    arrival_mean: float
    cpu_max: float
    tx_power_max: float
    power_threshold: float
    distance: float


@dataclass(frozen=True)
class SystemConfig:
    """Fixed parameters of one MEC network.

    ``data_unit`` is the number of bits that make one unit of backlog and
    rate inside the drift-plus-penalty weights ``Q/data_unit + V*c``. Queues,
    arrivals and rates are still stored in bits; only the per-frame objective
    is expressed in these units. ``data_unit=1`` gives the bare-bits form.
    """

    n_wd: int
    per_wd: tuple[WdProfile, ...]
    frame_duration: float = 1.0
    bandwidth: float = 2e6
    rate_overhead: float = 1.1
    noise_power: float = field(default_factory=lambda: noise_power_for(2e6))
    cycles_per_bit: float = 100.0
    energy_efficiency: float = 1e-26
    lyapunov_v: float = 20.0
    energy_queue_scale: float = 1000.0
    data_unit: float = 1e6

    @cached_property
    def weights(self) -> np.ndarray:
        return self._column("weight")

    @cached_property
    def arrival_means(self) -> np.ndarray:
        return self._column("arrival_mean")

    @cached_property
    def cpu_max(self) -> np.ndarray:
        return self._column("cpu_max")

    @cached_property
    def tx_power_max(self) -> np.ndarray:
        return self._column("tx_power_max")

    @cached_property
    def power_thresholds(self) -> np.ndarray:
        return self._column("power_threshold")

    @cached_property
    def distances(self) -> np.ndarray:
        return self._column("distance")

    def _column(self, name: str) -> np.ndarray:
        arr = np.array([getattr(p, name) for p in self.per_wd], dtype=float)
        arr.setflags(write=False)
        return arr

    def with_arrival_scale(self, scale: float) -> "SystemConfig":
        """Copy of this config with every arrival mean multiplied by ``scale``."""
        profiles = tuple(replace(p, arrival_mean=p.arrival_mean * scale) for p in self.per_wd)
        return replace(self, per_wd=profiles)


def default_config(
    n_wd: int = 10,
    arrival_mean: float = 3e6,
    **overrides,
) -> SystemConfig:
    """The simulation network: WDs evenly spaced over 120..255 m.

    Odd-numbered WDs (1-based) get weight 1.5, the others 1. With ``n_wd=10``
    the spacing is exactly 120 + 15*(i-1) meters.
    """
    if n_wd < 1:
        raise ConfigError("n_wd must be >= 1")
    distances = np.linspace(120.0, 255.0, n_wd) if n_wd > 1 else np.array([120.0])
    profiles = tuple(
        WdProfile(
            weight=1.5 if i % 2 == 0 else 1.0,
            arrival_mean=arrival_mean,
            cpu_max=3e8,
            tx_power_max=0.1,
            power_threshold=0.08,
            distance=float(d),
        )
        for i, d in enumerate(distances)
    )
    bandwidth = overrides.pop("bandwidth", 2e6)
    noise = overrides.pop("noise_power", noise_power_for(bandwidth))
    return validate_config(
        SystemConfig(n_wd=n_wd, per_wd=profiles, bandwidth=bandwidth, noise_power=noise, **overrides)
    )


_POSITIVE_SCALARS = (
    "frame_duration",
    "bandwidth",
    "noise_power",
    "cycles_per_bit",
    "energy_efficiency",
    "lyapunov_v",
    "energy_queue_scale",
    "data_unit",
)


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged, or raise ConfigError naming the first bad field."""
    if not isinstance(cfg.n_wd, (int, np.integer)) or cfg.n_wd < 1:
        raise ConfigError(f"n_wd must be a positive integer, got {cfg.n_wd!r}")
    for name in _POSITIVE_SCALARS:
        value = getattr(cfg, name)
        if not (math.isfinite(value) and value > 0):
            raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
    if not (math.isfinite(cfg.rate_overhead) and cfg.rate_overhead >= 1.0):
        raise ConfigError(f"rate_overhead < 1 (got {cfg.rate_overhead!r})")
    if cfg.frame_duration != 1.0:
        raise ConfigError("frame_duration must be 1 second")
    if len(cfg.per_wd) != cfg.n_wd:
        raise ConfigError(f"per_wd has {len(cfg.per_wd)} entries, expected n_wd={cfg.n_wd}")
    for i, p in enumerate(cfg.per_wd):
        for name in ("weight", "arrival_mean", "cpu_max", "tx_power_max", "power_threshold", "distance"):
            value = getattr(p, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"per_wd[{i}].{name} must be finite and > 0, got {value!r}")
    return cfg


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FrameInput:
    """Per-frame observation: channel gains and both queue vectors."""

    channel: np.ndarray
    data_queue: np.ndarray
    energy_queue: np.ndarray

    def __post_init__(self):
        for name in ("channel", "data_queue", "energy_queue"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        n = self.channel.shape[0]
        if self.channel.ndim != 1 or self.data_queue.shape != (n,) or self.energy_queue.shape != (n,):
            raise ValueError("channel, data_queue and energy_queue must be vectors of equal length")
        if not np.all(self.channel > 0):
            raise ValueError("channel gains must be strictly positive")
        if np.any(self.data_queue < 0) or np.any(self.energy_queue < 0):
            raise ValueError("queue lengths must be non-negative")

    @property
    def n(self) -> int:
        return self.channel.shape[0]


@dataclass(frozen=True, eq=False)
class OffloadAction:
    """Binary offloading decision, 1 = offload to the edge server."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or not np.all((bits == 0) | (bits == 1)):
            raise ValueError("offloading action must be a binary vector")
        object.__setattr__(self, "bits", _frozen_array(bits, dtype=np.int8))

    def __eq__(self, other):
        return isinstance(other, OffloadAction) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    @classmethod
    def from_int(cls, value: int, n: int) -> "OffloadAction":
        """Decode ``value`` with WD 1 as the most significant bit."""
        return cls(np.array([(value >> (n - 1 - i)) & 1 for i in range(n)]))


@dataclass(frozen=True, eq=False)
class ResourceAllocation:
    tau: np.ndarray
    cpu: np.ndarray
    offload_energy: np.ndarray
    offload_rate: np.ndarray

    def __post_init__(self):
        for name in ("tau", "cpu", "offload_energy", "offload_rate"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    @classmethod
    def zeros(cls, n: int) -> "ResourceAllocation":
        z = np.zeros(n)
        return cls(z, z, z, z)


def check_allocation(
    x: Sequence[int] | np.ndarray,
    y: ResourceAllocation,
    cfg: SystemConfig,
    data_queue: np.ndarray | None = None,
    tol: float = TOL,
) -> list[str]:
    """List every violated allocation invariant (empty when ``y`` is valid).

    Slack is ``tol`` scaled by the magnitude of the bound being checked.
    """
    x = np.asarray(x)
    problems = []
    if np.any(y.tau < 0) or np.any(y.cpu < 0) or np.any(y.offload_energy < 0) or np.any(y.offload_rate < 0):
        problems.append("negative entry")
    if y.tau.sum() > 1.0 + tol:
        problems.append(f"sum(tau)={y.tau.sum()!r} > 1")
    local = x == 0
    if np.any(y.tau[local] != 0) or np.any(y.offload_energy[local] != 0) or np.any(y.offload_rate[local] != 0):
        problems.append("local WD with offloading resources")
    if np.any(y.cpu[~local] != 0):
        problems.append("offloading WD with local CPU frequency")
    if np.any(y.cpu > cfg.cpu_max * (1 + tol)):
        problems.append("cpu above cpu_max")
    if np.any(y.offload_energy > cfg.tx_power_max * y.tau + tol * cfg.tx_power_max):
        problems.append("offload energy above P_max * tau")
    if data_queue is not None:
        slack = tol * (1.0 + np.asarray(data_queue))
        if np.any(y.cpu / cfg.cycles_per_bit > data_queue + slack):
            problems.append("local bits exceed data queue")
        if np.any(y.offload_rate > data_queue + slack):
            problems.append("offloaded bits exceed data queue")
    return problems


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """Everything observed and decided in one frame."""

    frame_index: int
    channel: np.ndarray
    data_queue: np.ndarray
    energy_queue: np.ndarray
    action: OffloadAction
    allocation: ResourceAllocation
    processed: np.ndarray
    energy: np.ndarray
    arrivals: np.ndarray
    objective: float
    candidate_count: int | None = None
    best_index: int | None = None
    best_order: int | None = None
    loss: float | None = None
    decide_seconds: float | None = None

    @property
    def rate(self) -> np.ndarray:
        # T = 1: bits per frame equal bits per second.
        return self.processed
