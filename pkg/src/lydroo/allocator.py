"""Optimal resource allocation for a fixed binary offloading action.

For a given action the per-frame problem is convex. Local WDs decouple and
get their CPU frequency in closed form. Offloading WDs share the frame
airtime: a single multiplier on ``sum(tau) <= 1`` is found by bisection,
and for each trial multiplier every WD picks its best airtime on its own.
The heavy lifting lives in the compiled kernel (see ``_backend``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .config import FrameInput, OffloadAction, ResourceAllocation, SystemConfig

_INNER = {"exact": 0, "golden": 1}


@dataclass(frozen=True)
class AllocatorOptions:
    """Stopping rules of the allocation solver.

    ``inner`` picks how each WD's airtime response is found: ``"exact"``
    solves the stationarity condition directly, ``"golden"`` runs a
    golden-section search on [0, 1] to ``inner_tol``.
    """

    dual_tol: float = 1e-6
    inner_tol: float = 1e-9
    max_iters: int = 200
    inner: str = "exact"

    def __post_init__(self):
        if not (self.dual_tol > 0 and self.inner_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.inner not in _INNER:
            raise ValueError(f"inner must be one of {sorted(_INNER)}")


DEFAULT_OPTIONS = AllocatorOptions()


def _kernel_args(w, Y, qcap, h, budget, cfg: SystemConfig):
    return (
        np.ascontiguousarray(w, dtype=float),
        np.ascontiguousarray(Y, dtype=float),
        np.ascontiguousarray(qcap, dtype=float),
        np.ascontiguousarray(h, dtype=float),
        cfg.cpu_max,
        cfg.tx_power_max,
        np.ascontiguousarray(budget, dtype=float),
        cfg.bandwidth / cfg.rate_overhead,
        cfg.noise_power,
        cfg.cycles_per_bit,
        cfg.energy_efficiency,
    )


def _opts_args(opts: AllocatorOptions):
    return opts.dual_tol, opts.inner_tol, opts.max_iters, _INNER[opts.inner]


def lyapunov_problem(xi: FrameInput, cfg: SystemConfig):
    """Kernel arguments for the drift-plus-penalty allocation of frame ``xi``.

    The kernel values one processed bit at ``w = a / data_unit`` with
    ``a = Q / data_unit + V c``, so its objective is sum(a r/data_unit) - sum(Y e).
    """
    u = cfg.data_unit
    w = (xi.data_queue / u + cfg.lyapunov_v * cfg.weights) / u
    return _kernel_args(w, xi.energy_queue, xi.data_queue, xi.channel, np.full(cfg.n_wd, np.inf), cfg)


def myopic_problem(xi: FrameInput, budgets, cfg: SystemConfig):
    """Kernel arguments for the weighted-rate allocation under energy budgets."""
    budgets = np.maximum(np.asarray(budgets, dtype=float), 0.0)
    zero = np.zeros(cfg.n_wd)
    return _kernel_args(cfg.weights, zero, xi.data_queue, xi.channel, budgets, cfg)


def _bits(x) -> np.ndarray:
    if isinstance(x, OffloadAction):
        return x.bits
    return np.ascontiguousarray(x, dtype=np.int8)


def _solve(x, problem, opts, kernels):
    kernels = kernels or _backend.kernels
    tau, f, e, r, value = kernels.solve(_bits(x), *problem, *_opts_args(opts))
    return ResourceAllocation(tau, f, e, r), float(value)


def solve_allocation(x, xi: FrameInput, cfg: SystemConfig, opts: AllocatorOptions = DEFAULT_OPTIONS,
                     kernels=None):
    """Optimal allocation and drift-plus-penalty value G(x, xi)."""
    return _solve(x, lyapunov_problem(xi, cfg), opts, kernels)


def solve_myopic_allocation(x, xi: FrameInput, budgets, cfg: SystemConfig,
                            opts: AllocatorOptions = DEFAULT_OPTIONS, kernels=None):
    """Allocation maximizing sum(c r) with per-WD energy ``e_i <= budgets[i]``."""
    return _solve(x, myopic_problem(xi, budgets, cfg), opts, kernels)


def evaluate_actions(X, problem, opts: AllocatorOptions = DEFAULT_OPTIONS, kernels=None) -> np.ndarray:
    """Objective value of each row of the binary matrix ``X`` under ``problem``."""
    kernels = kernels or _backend.kernels
    X = np.ascontiguousarray(X, dtype=np.int8)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D binary matrix")
    return kernels.solve_batch(X, *problem, *_opts_args(opts))
