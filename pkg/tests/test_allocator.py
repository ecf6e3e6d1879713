import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lydroo.allocator import AllocatorOptions, solve_allocation, solve_myopic_allocation
from lydroo.config import FrameInput, check_allocation, default_config
from lydroo.queueing import QueueState, frame_rate_energy, offload_bits, per_frame_objective
from instances import random_action, random_frame
from oracles import CPU_STEP, grid_objective


def _check_feasible(x, y, xi, cfg, tol=1e-9):
    assert check_allocation(x, y, cfg, xi.data_queue, tol) == []
    for i in np.flatnonzero(x):
        assert y.offload_rate[i] <= offload_bits(y.tau[i], y.offload_energy[i], xi.channel[i], cfg) * (1 + tol) + tol
    assert np.all(y.cpu <= cfg.cpu_max * (1 + tol))


def test_all_local_without_energy_price_runs_flat_out():
    cfg = default_config(4)
    xi = FrameInput(np.full(4, 1e-11), np.full(4, 1e9), np.zeros(4))
    y, G = solve_allocation([0, 0, 0, 0], xi, cfg)
    np.testing.assert_allclose(y.cpu, cfg.cpu_max)
    a = xi.data_queue / cfg.data_unit + cfg.lyapunov_v * cfg.weights
    assert G == pytest.approx(float(a @ (cfg.cpu_max / cfg.cycles_per_bit)) / cfg.data_unit, rel=1e-12)


@pytest.mark.parametrize("data_unit", [1.0, 1e6])
def test_local_frequency_matches_grid_search(data_unit):
    cfg = default_config(3, data_unit=data_unit)
    rng = np.random.default_rng(5)
    for _ in range(10):
        Q = rng.uniform(1e5, 1e7, 3)
        Y = rng.uniform(1.0, 3e3, 3)
        xi = FrameInput(np.full(3, 1e-11), Q, Y)
        y, _ = solve_allocation([0, 0, 0], xi, cfg)
        a = Q / data_unit + cfg.lyapunov_v * cfg.weights
        for j in range(3):
            closed = min(np.sqrt(a[j] / data_unit / (3 * cfg.cycles_per_bit * cfg.energy_efficiency * Y[j])),
                         cfg.cpu_max[j], cfg.cycles_per_bit * Q[j])
            assert y.cpu[j] == pytest.approx(closed, rel=1e-12)
            grid = np.append(np.arange(0.0, min(cfg.cpu_max[j], 100 * Q[j]), CPU_STEP), min(cfg.cpu_max[j], 100 * Q[j]))
            value = a[j] / data_unit * grid / 100 - Y[j] * 1e-26 * grid**3
            assert abs(grid[np.argmax(value)] - y.cpu[j]) <= CPU_STEP


def test_two_offloaders_match_grid_oracle():
    rng = np.random.default_rng(11)
    cfg = default_config(2)
    for _ in range(15):
        xi = random_frame(rng, cfg)
        _, G = solve_allocation([1, 1], xi, cfg)
        oracle = grid_objective([1, 1], xi, cfg)
        assert G >= oracle * (1 - 1e-12)
        assert G == pytest.approx(oracle, rel=1e-3)


def test_bare_bit_units_match_grid_oracle():
    rng = np.random.default_rng(12)
    cfg = default_config(3, data_unit=1.0)
    for _ in range(10):
        xi = random_frame(rng, cfg, y_max=5e5)
        x = random_action(rng, 3, max_offload=2)
        _, G = solve_allocation(x, xi, cfg)
        assert G == pytest.approx(grid_objective(x, xi, cfg), rel=1e-3)


def test_myopic_zero_budget_gives_zero():
    cfg = default_config(3)
    xi = FrameInput(np.full(3, 2e-11), np.full(3, 5e6), np.zeros(3))
    for x in ([0, 0, 0], [1, 0, 1], [1, 1, 1]):
        y, value = solve_myopic_allocation(x, xi, np.zeros(3), cfg)
        assert value == 0.0
        assert np.all(y.cpu == 0) and np.all(y.tau == 0) and np.all(y.offload_energy == 0)


def test_myopic_local_with_slack_budget_runs_flat_out():
    cfg = default_config(2)
    xi = FrameInput(np.full(2, 2e-11), np.full(2, 1e10), np.zeros(2))
    y, value = solve_myopic_allocation([0, 0], xi, np.full(2, 1e6), cfg)
    np.testing.assert_allclose(y.cpu, cfg.cpu_max)
    assert value == pytest.approx(float(cfg.weights @ cfg.cpu_max) / 100)


def test_myopic_matches_grid_oracle():
    rng = np.random.default_rng(21)
    cfg = default_config(2)
    for _ in range(15):
        xi = random_frame(rng, cfg)
        x = random_action(rng, 2)
        budgets = rng.uniform(0.02, 0.2, 2)
        y, value = solve_myopic_allocation(x, xi, budgets, cfg)
        _, power = frame_rate_energy(x, y, xi.channel, cfg)
        assert np.all(power <= budgets * (1 + 1e-9))
        oracle = grid_objective(x, xi, cfg, myopic_budgets=budgets)
        assert value >= oracle * (1 - 1e-12)
        assert value == pytest.approx(oracle, rel=1e-3)


def test_objective_value_equals_recomputed_objective():
    rng = np.random.default_rng(3)
    cfg = default_config(6)
    for _ in range(20):
        xi = random_frame(rng, cfg)
        x = random_action(rng, 6)
        y, G = solve_allocation(x, xi, cfg)
        recomputed = per_frame_objective(x, y, QueueState(xi.data_queue, xi.energy_queue), xi.channel, cfg)
        assert G == pytest.approx(recomputed, rel=1e-9, abs=1e-12)


def test_empty_offloading_set_uses_no_airtime():
    cfg = default_config(3)
    xi = random_frame(np.random.default_rng(0), cfg)
    y, _ = solve_allocation([0, 0, 0], xi, cfg)
    assert np.all(y.tau == 0) and np.all(y.offload_energy == 0)


def test_zero_queue_gate():
    cfg = default_config(4)
    xi = FrameInput(np.full(4, 3e-11), [0.0, 5e6, 0.0, 5e6], [0.0, 10.0, 50.0, 0.0])
    for x in ([0, 0, 0, 0], [1, 1, 1, 1], [1, 0, 0, 1]):
        y, _ = solve_allocation(x, xi, cfg)
        for i in (0, 2):
            assert y.offload_rate[i] == 0 and y.cpu[i] == 0 and y.tau[i] == 0


def test_golden_inner_search_agrees_with_exact():
    rng = np.random.default_rng(8)
    cfg = default_config(5)
    golden = AllocatorOptions(inner="golden")
    for _ in range(30):
        xi = random_frame(rng, cfg)
        x = random_action(rng, 5)
        _, G_exact = solve_allocation(x, xi, cfg)
        _, G_golden = solve_allocation(x, xi, cfg, golden)
        assert G_golden == pytest.approx(G_exact, rel=1e-6, abs=1e-12)


def test_options_validation():
    with pytest.raises(ValueError):
        AllocatorOptions(dual_tol=0)
    with pytest.raises(ValueError):
        AllocatorOptions(max_iters=0)
    with pytest.raises(ValueError):
        AllocatorOptions(inner="simplex")


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_returned_allocation_is_feasible(n, seed):
    rng = np.random.default_rng(seed)
    cfg = default_config(n)
    xi = random_frame(rng, cfg, q_range=(1.0, 1e8), y_max=5e3)
    x = random_action(rng, n)
    y, G = solve_allocation(x, xi, cfg)
    _check_feasible(x, y, xi, cfg)
    assert G >= 0
    budgets = rng.uniform(0, 0.3, n)
    y, _ = solve_myopic_allocation(x, xi, budgets, cfg)
    _check_feasible(x, y, xi, cfg)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["queue", "gain"]), st.floats(1.0, 5.0))
def test_enlarging_queue_or_gain_never_lowers_value(seed, which, factor):
    rng = np.random.default_rng(seed)
    cfg = default_config(4)
    xi = random_frame(rng, cfg)
    x = random_action(rng, 4)
    i = int(rng.integers(4))
    Q, h = xi.data_queue.copy(), xi.channel.copy()
    if which == "queue":
        Q[i] *= factor
    else:
        h[i] *= factor
    _, G0 = solve_allocation(x, xi, cfg)
    _, G1 = solve_allocation(x, FrameInput(h, Q, xi.energy_queue), cfg)
    assert G1 >= G0 * (1 - 1e-9) - 1e-12
