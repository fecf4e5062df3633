import numpy as np
import pytest

from qmine.network import (MlpParams, backward, dv_objective,
                           dv_value_and_upstream, ema_smooth, forward,
                           init_mlp, init_velocity, ma_smooth,
                           make_dropout_masks, sgd_step)


def flat_params(params):
    return np.concatenate(
        [w.ravel() for w in params.weights] + [b.ravel() for b in params.biases])


def set_flat(params, vec):
    pos = 0
    for w in params.weights:
        w[...] = vec[pos:pos + w.size].reshape(w.shape)
        pos += w.size
    for b in params.biases:
        b[...] = vec[pos:pos + b.size].reshape(b.shape)
        pos += b.size


def test_init_shapes_and_ranges():
    rng = np.random.default_rng(0)
    params = init_mlp(6, hidden=(5, 4), rng=rng)
    assert [w.shape for w in params.weights] == [(6, 5), (5, 4), (4, 1)]
    assert all(np.all(b == 0) for b in params.biases)
    limit = np.sqrt(6.0 / (6 + 5))
    assert np.abs(params.weights[0]).max() <= limit


def test_forward_linear_case():
    # single linear layer: f(x) = x @ w + b, ReLU never applied to output
    params = MlpParams([np.array([[2.0], [-1.0]])], [np.array([0.5])])
    out, _ = forward(params, np.array([[1.0, 1.0], [0.0, 3.0]]))
    np.testing.assert_allclose(out, [1.5, -2.5])


def test_forward_applies_relu_and_masks():
    params = MlpParams(
        [np.array([[1.0, -1.0]]), np.array([[1.0], [1.0]])],
        [np.zeros(2), np.zeros(1)])
    x = np.array([[2.0], [-2.0]])
    out, _ = forward(params, x)
    # +2 -> hidden (2, 0) -> 2 ; -2 -> hidden (0, 2) -> 2
    np.testing.assert_allclose(out, [2.0, 2.0])
    masks = [np.array([[0.0, 0.0], [2.0, 2.0]])]
    out_m, _ = forward(params, x, masks=masks)
    np.testing.assert_allclose(out_m, [0.0, 4.0])


@pytest.mark.parametrize("with_masks", [False, True])
def test_backward_matches_finite_differences(with_masks):
    rng = np.random.default_rng(7)
    params = init_mlp(4, hidden=(8, 6), rng=rng)
    x = rng.standard_normal((5, 4))
    upstream = rng.standard_normal(5)
    masks = (make_dropout_masks(rng, 5, (8, 6), 0.3) if with_masks else None)

    def objective(vec):
        probe = params.copy()
        set_flat(probe, vec)
        out, _ = forward(probe, x, masks=masks)
        return float(np.dot(upstream, out))

    _, cache = forward(params, x, masks=masks)
    grads_w, grads_b = backward(params, cache, upstream)
    analytic = np.concatenate(
        [g.ravel() for g in grads_w] + [g.ravel() for g in grads_b])

    theta = flat_params(params)
    numeric = np.empty_like(theta)
    eps = 1e-6
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += eps
        down[i] -= eps
        numeric[i] = (objective(up) - objective(down)) / (2 * eps)

    denom = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(analytic - numeric) / denom) < 1e-5


def test_dv_objective_values():
    # f identically zero: mean 0 - log mean 1 = 0
    assert dv_objective(np.zeros(10), np.zeros(10)) == pytest.approx(0.0)
    # constant f cancels exactly
    assert dv_objective(np.full(4, 3.7), np.full(8, 3.7)) == pytest.approx(0.0)
    # hand value: f_P = [ln 4], f_Q = [0, 0] -> (ln4 - ln1)/ln2 = 2 bits
    assert dv_objective(np.array([np.log(4.0)]), np.zeros(2)) == pytest.approx(2.0)


def test_dv_objective_is_overflow_safe():
    val = dv_objective(np.array([1000.0]), np.array([1000.0, 1000.0]))
    assert np.isfinite(val) and val == pytest.approx(0.0)


def test_dv_upstream_matches_finite_differences():
    rng = np.random.default_rng(3)
    f_joint = rng.standard_normal(6)
    f_marg = rng.standard_normal(9)
    value, g_joint, g_marg, batch_mean = dv_value_and_upstream(f_joint, f_marg)
    assert value == pytest.approx(dv_objective(f_joint, f_marg))
    assert batch_mean == pytest.approx(np.mean(np.exp(f_marg)))

    eps = 1e-7
    for i in range(f_joint.size):
        probe = f_joint.copy()
        probe[i] += eps
        num = (dv_objective(probe, f_marg) - value) / eps
        assert g_joint[i] == pytest.approx(num, rel=1e-5)
    for i in range(f_marg.size):
        probe = f_marg.copy()
        probe[i] += eps
        num = (dv_objective(f_joint, probe) - value) / eps
        assert g_marg[i] == pytest.approx(num, rel=1e-4, abs=1e-7)


def test_dv_upstream_external_denominator():
    f_joint = np.array([0.2])
    f_marg = np.array([0.0, 1.0])
    batch_denom = np.mean(np.exp(f_marg))
    _, _, g_plain, _ = dv_value_and_upstream(f_joint, f_marg)
    _, _, g_ext, _ = dv_value_and_upstream(f_joint, f_marg, marg_denom=batch_denom)
    np.testing.assert_allclose(g_plain, g_ext, rtol=1e-12)
    # doubling the denominator halves the marginal gradient
    _, _, g_half, _ = dv_value_and_upstream(
        f_joint, f_marg, marg_denom=2 * batch_denom)
    np.testing.assert_allclose(g_half, g_plain / 2, rtol=1e-12)


def test_dropout_masks_statistics():
    rng = np.random.default_rng(11)
    masks = make_dropout_masks(rng, 2000, (32,), 0.1)
    m = masks[0]
    assert set(np.unique(m)) <= {0.0, 1.0 / 0.9}
    assert m.mean() == pytest.approx(1.0, abs=0.01)  # inverted scaling


def test_sgd_step_two_iterations():
    params = MlpParams([np.array([[1.0]])], [np.array([0.0])])
    velocity = init_velocity(params)
    grads = ([np.array([[1.0]])], [np.array([2.0])])
    sgd_step(params, grads, velocity, lr=0.1, momentum=0.5)
    assert params.weights[0][0, 0] == pytest.approx(1.1)
    assert params.biases[0][0] == pytest.approx(0.2)
    sgd_step(params, grads, velocity, lr=0.1, momentum=0.5)
    # velocity: 1 -> 1.5, parameter: 1.1 + 0.15
    assert params.weights[0][0, 0] == pytest.approx(1.25)
    assert params.biases[0][0] == pytest.approx(0.5)


def test_ema_smooth():
    series = np.array([1.0, 1.0, 1.0])
    np.testing.assert_allclose(ema_smooth(series, 0.3), series)
    step = np.array([0.0, 1.0, 1.0])
    got = ema_smooth(step, 0.5)
    np.testing.assert_allclose(got, [0.0, 0.5, 0.75])
    assert ema_smooth(np.array([]), 0.5).size == 0


def test_ma_smooth():
    series = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(ma_smooth(series, 1), series)
    got = ma_smooth(series, 3)
    np.testing.assert_allclose(got, [0.5, 1.0, 2.0, 3.0, 3.5])
    with pytest.raises(ValueError):
        ma_smooth(series, 0)
    # even window keeps the centered truncation convention
    np.testing.assert_allclose(ma_smooth(np.array([2.0, 4.0]), 2), [3.0, 3.0])
