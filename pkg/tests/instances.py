"""Random problem instances shared by several test modules."""

from __future__ import annotations

import numpy as np

from lydroo.config import FrameInput, default_config
from lydroo.environment import mean_gain, rician_fading



def random_frame(rng, cfg, q_range=(1e5, 4e7), y_max=500.0, p_zero_y=0.3):
    """Channel from a random distance and fading draw; queues spread over typical operating ranges."""
    n = cfg.n_wd
    dist = rng.uniform(120.0, 255.0, n)
    h = mean_gain(dist) * np.maximum(rician_fading(rng, n), 1e-3)
    Q = np.exp(rng.uniform(np.log(q_range[0]), np.log(q_range[1]), n))
    Y = np.where(rng.random(n) < p_zero_y, 0.0, rng.uniform(0.0, y_max, n))
    return FrameInput(h, Q, Y)


def random_action(rng, n, max_offload=None):
    x = (rng.random(n) < 0.5).astype(np.int8)
    if max_offload is not None:
        on = np.flatnonzero(x)
        if on.size > max_offload:
            x[rng.choice(on, on.size - max_offload, replace=False)] = 0
    return x
