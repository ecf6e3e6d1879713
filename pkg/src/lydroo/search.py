"""Search over binary offloading actions: full enumeration and coordinate descent."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .allocator import DEFAULT_OPTIONS, AllocatorOptions, _solve, evaluate_actions, lyapunov_problem
from .config import FrameInput, OffloadAction, SystemConfig

MAX_EXHAUSTIVE_WD = 20
IMPROVE_RTOL = 1e-9


@lru_cache(maxsize=8)
def all_actions(n: int) -> np.ndarray:
    """Every binary vector of length ``n``, row k encoding k with WD 1 as MSB."""
    k = np.arange(2**n, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    X = ((k >> shifts) & 1).astype(np.int8)
    X.setflags(write=False)
    return X


def exhaustive_best(xi: FrameInput, cfg: SystemConfig, opts: AllocatorOptions = DEFAULT_OPTIONS,
                    problem=None, kernels=None):
    """Best action over all 2^N candidates; ties go to the smallest binary value."""
    n = cfg.n_wd
    if n > MAX_EXHAUSTIVE_WD:
        raise ValueError(f"exhaustive search is limited to {MAX_EXHAUSTIVE_WD} WDs, got {n}")
    problem = problem if problem is not None else lyapunov_problem(xi, cfg)
    X = all_actions(n)
    values = evaluate_actions(X, problem, opts, kernels)
    best = int(np.argmax(values))
    y, G = _solve(X[best], problem, opts, kernels)
    return OffloadAction(X[best]), y, G


def coordinate_descent_best(xi: FrameInput, cfg: SystemConfig, opts: AllocatorOptions = DEFAULT_OPTIONS,
                            problem=None, start=None, max_sweeps: int | None = None, kernels=None):
    """Best-flip coordinate descent from the all-local action.

    Each sweep scores all N single-bit flips and applies the best one if it
    improves G by more than a relative 1e-9; stops at a flip-local optimum
    or after ``max_sweeps`` (default N) applied flips.
    """
    n = cfg.n_wd
    problem = problem if problem is not None else lyapunov_problem(xi, cfg)
    x = np.zeros(n, dtype=np.int8) if start is None else np.array(start, dtype=np.int8)
    G = float(evaluate_actions(x[None, :], problem, opts, kernels)[0])
    eye = np.eye(n, dtype=np.int8)
    for _ in range(max_sweeps if max_sweeps is not None else n):
        flips = x[None, :] ^ eye
        values = evaluate_actions(flips, problem, opts, kernels)
        j = int(np.argmax(values))
        if values[j] <= G + IMPROVE_RTOL * abs(G):
            break
        x = flips[j].copy()
        G = float(values[j])
    y, G = _solve(x, problem, opts, kernels)
    return OffloadAction(x), y, G
