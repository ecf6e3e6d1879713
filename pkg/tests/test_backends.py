import numpy as np
import pytest

from lydroo import _backend
from lydroo.allocator import AllocatorOptions, evaluate_actions, lyapunov_problem, myopic_problem, solve_allocation
from lydroo.config import FrameInput, default_config
from lydroo.search import all_actions
from instances import random_action, random_frame

BACKENDS = _backend.available_backends()
needs_compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")


def test_selected_backend_is_importable():
    assert _backend.BACKEND in BACKENDS
    assert _backend.kernels is BACKENDS[_backend.BACKEND]


@needs_compiled
@pytest.mark.parametrize("inner", ["exact", "golden"])
def test_compiled_and_python_kernels_agree(inner):
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    opts = AllocatorOptions(inner=inner)
    rng = np.random.default_rng(99)
    cfg = default_config(6)
    for k in range(40):
        xi = random_frame(rng, cfg, q_range=(1.0, 1e8), y_max=3e3)
        x = random_action(rng, 6)
        if k % 2:
            problem = lyapunov_problem(xi, cfg)
        else:
            problem = myopic_problem(xi, rng.uniform(0, 0.2, 6), cfg)
        a = solve_allocation(x, xi, cfg, opts, kernels=py)
        b = solve_allocation(x, xi, cfg, opts, kernels=cy)
        for name in ("tau", "cpu", "offload_energy", "offload_rate"):
            np.testing.assert_allclose(getattr(a[0], name), getattr(b[0], name), rtol=1e-10, atol=1e-14)
        assert a[1] == pytest.approx(b[1], rel=1e-10, abs=1e-14)
        X = all_actions(6)[:: 7]
        np.testing.assert_allclose(evaluate_actions(X, problem, opts, py), evaluate_actions(X, problem, opts, cy),
                                   rtol=1e-10, atol=1e-14)


@needs_compiled
def test_kernels_agree_when_energy_price_and_budget_are_both_set():
    # Only the golden path handles a priced user with a finite energy budget.
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    cfg = default_config(3)
    xi = FrameInput([2e-11, 5e-12, 3e-11], [4e6, 8e6, 1e7], [20.0, 0.0, 300.0])
    problem = list(lyapunov_problem(xi, cfg))
    problem[6] = np.array([0.03, 0.05, 0.01])
    problem = tuple(problem)
    X = all_actions(3)
    v_py = evaluate_actions(X, problem, kernels=py)
    v_cy = evaluate_actions(X, problem, kernels=cy)
    np.testing.assert_allclose(v_py, v_cy, rtol=1e-10)


def test_batch_matches_single_solves():
    cfg = default_config(4)
    xi = random_frame(np.random.default_rng(1), cfg)
    problem = lyapunov_problem(xi, cfg)
    X = all_actions(4)
    batch = evaluate_actions(X, problem)
    single = [solve_allocation(x, xi, cfg)[1] for x in X]
    np.testing.assert_allclose(batch, single, rtol=1e-12)


def test_batch_rejects_vectors():
    cfg = default_config(2)
    problem = lyapunov_problem(random_frame(np.random.default_rng(0), cfg), cfg)
    with pytest.raises(ValueError):
        evaluate_actions(np.array([0, 1]), problem)
