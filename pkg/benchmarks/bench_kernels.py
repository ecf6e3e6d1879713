"""Compare the compiled and interpreted allocation kernels.

Usage: python3 benchmarks/bench_kernels.py [--wds 10] [--frames 20] [--repeat 3]

For each backend, every one of the 2^N actions of a batch of random frames
is solved; the script prints microseconds per solve and the largest value
difference between backends.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lydroo._backend import available_backends
from lydroo.allocator import AllocatorOptions, evaluate_actions, lyapunov_problem
from lydroo.config import FrameInput, default_config
from lydroo.environment import mean_gain
from lydroo.search import all_actions


def random_frames(cfg, count, rng):
    gains = mean_gain(cfg.distances)
    frames = []
    for _ in range(count):
        h = gains * rng.exponential(size=cfg.n_wd)
        q = rng.uniform(1e5, 4e7, cfg.n_wd)
        y = rng.uniform(0, 500, cfg.n_wd) * (rng.random(cfg.n_wd) > 0.3)
        frames.append(FrameInput(h, q, y))
    return frames


def time_backend(kernels, problems, X, opts, repeat):
    best = np.inf
    values = None
    for _ in range(repeat):
        start = time.perf_counter()
        values = [evaluate_actions(X, p, opts, kernels) for p in problems]
        best = min(best, time.perf_counter() - start)
    return best / (len(problems) * X.shape[0]) * 1e6, np.concatenate(values)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--wds", type=int, default=10)
    parser.add_argument("--frames", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    cfg = default_config(args.wds)
    problems = [lyapunov_problem(xi, cfg) for xi in random_frames(cfg, args.frames, np.random.default_rng(args.seed))]
    X = all_actions(args.wds)
    backends = available_backends()
    print(f"{args.wds} WDs, {args.frames} frames x {X.shape[0]} actions per backend")
    print(f"{'backend':<8} {'inner':<7} {'us/solve':>10}")
    for inner in ("exact", "golden"):
        opts = AllocatorOptions(inner=inner)
        results = {}
        for name, kernels in backends.items():
            us, values = time_backend(kernels, problems, X, opts, args.repeat)
            results[name] = (us, values)
            print(f"{name:<8} {inner:<7} {us:>10.2f}")
        if len(results) == 2:
            (us_py, v_py), (us_c, v_c) = results["python"], results["cython"]
            diff = float(np.max(np.abs(v_py - v_c) / np.maximum(np.abs(v_py), 1e-12)))
            print(f"speed-up {us_py / us_c:.1f}x, max relative value difference {diff:.1e}")


if __name__ == "__main__":
    main()
