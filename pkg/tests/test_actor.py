import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lydroo.actor import (
    PolicyNetwork,
    QuantizerState,
    cross_entropy,
    features,
    nop_candidates,
    opq_quantize,
    sigmoid,
    update_candidate_count,
    update_Mt,
)
from lydroo.config import FrameInput
from oracles import numerical_gradient


def _loss_of_flat(net, X, labels):
    probe = net.copy()

    def fn(flat):
        probe.load_flat(flat)
        return probe.loss_and_grad(X, labels)[0]

    return fn


@pytest.mark.parametrize("n", [1, 10, 30])
def test_forward_shape_and_parameter_count(n):
    net = PolicyNetwork(n, np.random.default_rng(0))
    assert net.forward(np.zeros(3 * n)).shape == (n,)
    assert net.forward(np.zeros((5, 3 * n))).shape == (5, n)
    assert net.n_params == 3 * n * 120 + 120 + 120 * 80 + 80 + 80 * n + n


def test_zero_network_outputs_one_half():
    net = PolicyNetwork(4, np.random.default_rng(0))
    net.load_flat(np.zeros(net.n_params))
    np.testing.assert_array_equal(net.forward(np.zeros(12)), 0.5)


def test_verbatim_init_is_unit_normal():
    net = PolicyNetwork(10, np.random.default_rng(1), scaled_init=False)
    flat = net.to_flat()
    assert flat.std() == pytest.approx(1.0, rel=0.03)
    scaled = PolicyNetwork(10, np.random.default_rng(1)).params[0]
    assert scaled.std() == pytest.approx(1 / np.sqrt(30), rel=0.05)


def test_flat_layout_and_round_trip():
    net = PolicyNetwork(3, np.random.default_rng(2))
    flat = net.to_flat()
    np.testing.assert_array_equal(flat[: 120 * 9], net.params[0].ravel())
    np.testing.assert_array_equal(flat[120 * 9: 120 * 9 + 120], net.params[1])
    other = PolicyNetwork(3, np.random.default_rng(3))
    other.load_flat(flat)
    x = np.random.default_rng(4).standard_normal(9)
    np.testing.assert_array_equal(other.forward(x), net.forward(x))
    with pytest.raises(ValueError):
        other.load_flat(flat[:-1])


@given(arrays(np.float64, 6, elements=st.floats(-1e6, 1e6)))
def test_outputs_stay_in_unit_interval(x):
    net = PolicyNetwork(2, np.random.default_rng(0))
    out = net.forward(x)
    z = net.logits(x)
    assert np.all(np.isfinite(out))
    assert np.all((out >= 0) & (out <= 1))
    moderate = np.abs(z) < 30
    assert np.all((out[moderate] > 0) & (out[moderate] < 1))


def test_sigmoid_never_overflows():
    with np.errstate(over="raise"):
        np.testing.assert_allclose(sigmoid([-1e4, 0.0, 1e4]), [0.0, 0.5, 1.0])


def test_backprop_matches_finite_differences():
    rng = np.random.default_rng(7)
    net = PolicyNetwork(3, rng)
    X = rng.standard_normal((6, 9))
    labels = rng.integers(0, 2, (6, 3))
    _, grads = net.loss_and_grad(X, labels)
    analytic = np.concatenate([g.ravel() for g in grads])
    numeric = numerical_gradient(_loss_of_flat(net, X, labels), net.to_flat(), step=1e-5)
    err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    assert err < 1e-4


def test_loss_matches_probability_form():
    rng = np.random.default_rng(8)
    net = PolicyNetwork(4, rng)
    X = rng.standard_normal((5, 12))
    labels = rng.integers(0, 2, (5, 4))
    loss, _ = net.loss_and_grad(X, labels)
    assert loss == pytest.approx(cross_entropy(net.forward(X), labels), rel=1e-10)


def test_cross_entropy_is_finite_at_the_edges():
    assert np.isfinite(cross_entropy([[0.0, 1.0]], [[1, 0]]))
    assert cross_entropy([[1 - 1e-15, 1e-15]], [[1, 0]]) == pytest.approx(0.0, abs=1e-12)


def test_features_layout():
    xi = FrameInput([2e-11, 4e-11], [1e7, 3e7], [500.0, 0.0])
    f = features(xi, np.array([1e-11, 2e-11]))
    np.testing.assert_allclose(f, [2.0, 2.0, 1.0, 3.0, 0.5, 0.0])


def test_opq_worked_example():
    out = opq_quantize(np.array([0.2, 0.6, 0.9]), 3)
    assert out.tolist() == [[0, 1, 1], [0, 0, 1], [1, 1, 1]]


def test_opq_half_is_rounded_down():
    assert opq_quantize(np.full(4, 0.5), 1).tolist() == [[0, 0, 0, 0]]


def test_opq_count_bounds():
    with pytest.raises(ValueError):
        opq_quantize(np.array([0.1, 0.2]), 3)
    with pytest.raises(ValueError):
        opq_quantize(np.array([0.1, 0.2]), 0)


unit = st.floats(0.0, 1.0, allow_nan=False)


@given(arrays(np.float64, st.integers(1, 12), elements=unit, unique=True))
def test_opq_candidates_distinct_for_distinct_distances(xhat):
    dist = np.abs(xhat - 0.5)
    if np.unique(dist).size < dist.size:
        return
    out = opq_quantize(xhat, xhat.size)
    assert np.unique(out, axis=0).shape[0] == xhat.size


@given(arrays(np.float64, st.integers(1, 10), elements=unit), st.data())
def test_opq_preserves_order(xhat, data):
    k = data.draw(st.integers(1, xhat.size))
    out = opq_quantize(xhat, k)
    for cand in out:
        ones = xhat[cand == 1]
        zeros = xhat[cand == 0]
        if ones.size and zeros.size:
            assert ones.min() >= zeros.max()
    np.testing.assert_array_equal(out[0], (xhat > 0.5).astype(np.int8))


def test_nop_with_two_candidates():
    xhat = np.array([0.3, 0.7, 0.55])
    noise = np.random.default_rng(5).standard_normal(3)
    out = nop_candidates(xhat, 2, np.random.default_rng(5))
    assert out.tolist() == [(xhat > 0.5).astype(int).tolist(), (sigmoid(xhat + noise) > 0.5).astype(int).tolist()]


def test_nop_layout_and_reproducibility():
    xhat = np.random.default_rng(0).random(6)
    a = nop_candidates(xhat, 8, np.random.default_rng(3))
    b = nop_candidates(xhat, 8, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[:4], opq_quantize(xhat, 4))
    with pytest.raises(ValueError):
        nop_candidates(xhat, 3, np.random.default_rng(0))


def test_candidate_count_examples():
    assert update_candidate_count([3, 1, 2], 10) == 8
    assert update_candidate_count([0] * 32, 10) == 2
    assert update_candidate_count([0, 9, 1], 10) == 20


def test_quantizer_state_window():
    state = QuantizerState(10, interval=4)
    assert state.count == 20
    for m in (9, 0, 1, 0, 2):
        state.record(m)
    assert list(state.history) == [0, 1, 0, 2]
    assert update_Mt(state) == 6


@given(st.integers(1, 30), st.lists(st.integers(0, 29), max_size=40))
def test_candidate_count_even_and_bounded(n, history):
    state = QuantizerState(n, interval=8)
    for m in history:
        state.record(min(m, n - 1))
        count = update_Mt(state)
        assert count % 2 == 0 and 2 <= count <= 2 * n
