"""Tests for reward models: forward passes, gradients, losses, training, checkpoints."""

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import CheckpointError, ConfigError, DimensionMismatchError, EmptyDatasetError, NonFiniteError
from app.models import (
    Dataset,
    FeatureMapSpec,
    ModelSpec,
    RegSpec,
    TrainConfig,
    Transition,
    arm_values,
    feature_map,
    forward,
    forward_batch,
    grad_params,
    init_params,
    jacobian,
    load_params,
    mse,
    regularizer_value_and_grad,
    ridge_fit,
    save_params,
    sse_value_and_grad,
    train,
)


def finite_difference(fn, theta, step=1e-5):
    grad = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        e = np.zeros_like(theta)
        e[i] = step
        grad[i] = (fn(theta + e) - fn(theta - e)) / (2 * step)
    return grad


def random_data(rng, spec, n, theta=None, noise=0.0):
    data = Dataset(spec.context_dim)
    for _ in range(n):
        x = rng.normal(size=spec.context_dim)
        a = int(rng.integers(spec.arm_count))
        r = forward(spec, theta, x, a) if theta is not None else rng.normal()
        data.append(Transition(x, a, r + noise * rng.normal()))
    return data


# ---------- specs ----------

def test_mlp_param_count(tiny_mlp):
    assert tiny_mlp.param_count == 5 * 6 + 6 + 6 * 1 + 1
    assert tiny_mlp.width == 6


def test_mlp_rejects_wrong_input_width():
    with pytest.raises(ValidationError):
        ModelSpec(kind="mlp", context_dim=3, arm_count=2, layer_widths=(4, 6, 1))


def test_output_head_needs_one_output_per_arm():
    with pytest.raises(ValidationError):
        ModelSpec(kind="mlp", context_dim=3, arm_count=2, layer_widths=(3, 6, 1), arm_encoding="output_head")


def test_kernel_model_needs_fourier_features():
    with pytest.raises(ValidationError):
        ModelSpec(kind="kernel_features", context_dim=2, arm_count=2)


def test_init_params_linear_is_zero(linear_spec):
    assert np.array_equal(init_params(linear_spec, seed=5), np.zeros(4))


def test_init_params_mlp_is_seeded(tiny_mlp):
    a, b = init_params(tiny_mlp, 7), init_params(tiny_mlp, 7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, init_params(tiny_mlp, 8))
    # biases start at zero
    assert np.all(a[30:36] == 0.0) and a[-1] == 0.0


# ---------- forward ----------

def test_linear_zero_parameters_give_zero(linear_spec):
    assert forward(linear_spec, np.zeros(4), np.array([3.0, 5.0]), 1) == 0.0


def test_disjoint_blocks_select_arm(linear_spec):
    theta = np.array([1.0, 0.0, 0.0, 1.0])
    x = np.array([3.0, 5.0])
    assert forward(linear_spec, theta, x, 0) == 3.0
    assert forward(linear_spec, theta, x, 1) == 5.0


def test_shared_features_concatenate_onehot():
    spec = ModelSpec(kind="linear", context_dim=2, arm_count=3, feature_map=FeatureMapSpec(kind="shared"))
    assert np.array_equal(feature_map(spec, np.array([0.5, -1.0]), 2), [0.5, -1.0, 0.0, 0.0, 1.0])


def test_random_fourier_features_are_deterministic_and_bounded():
    fmap = FeatureMapSpec(kind="random_fourier", output_dim=50, bandwidth=0.7, seed=3)
    spec = ModelSpec(kind="kernel_features", context_dim=2, arm_count=2, feature_map=fmap)
    x = np.array([0.2, -0.4])
    phi = feature_map(spec, x, 1)
    assert phi.shape == (50,)
    assert np.array_equal(phi, feature_map(spec, x, 1))
    assert np.all(np.abs(phi) <= np.sqrt(2.0 / 50) + 1e-15)


def test_mlp_forward_matches_manual_evaluation(rng):
    spec = ModelSpec(kind="mlp", context_dim=3, arm_count=1, layer_widths=(4, 8, 1), activation="tanh")
    theta = rng.normal(size=spec.param_count)
    x = rng.normal(size=3)
    W1, b1 = theta[:32].reshape(8, 4), theta[32:40]
    W2, b2 = theta[40:48].reshape(1, 8), theta[48]
    expected = float(W2 @ np.tanh(W1 @ np.append(x, 1.0) + b1) + b2)
    assert forward(spec, theta, x, 0) == pytest.approx(expected, abs=1e-12)


def test_forward_batch_matches_single_calls(rng, tiny_mlp):
    theta = rng.normal(size=tiny_mlp.param_count)
    contexts = rng.normal(size=(7, 3))
    arms = rng.integers(2, size=7)
    batch = forward_batch(tiny_mlp, theta, contexts, arms)
    single = [forward(tiny_mlp, theta, x, a) for x, a in zip(contexts, arms)]
    assert np.allclose(batch, single, atol=1e-14)


def test_arm_values_lists_every_arm(rng, tiny_mlp):
    theta = rng.normal(size=tiny_mlp.param_count)
    x = rng.normal(size=3)
    values = arm_values(tiny_mlp, theta, x)
    assert values.shape == (2,)
    assert values[1] == pytest.approx(forward(tiny_mlp, theta, x, 1), abs=1e-14)


def test_forward_dimension_checks(linear_spec):
    with pytest.raises(DimensionMismatchError):
        forward(linear_spec, np.zeros(3), np.zeros(2), 0)
    with pytest.raises(DimensionMismatchError):
        forward(linear_spec, np.zeros(4), np.zeros(3), 0)
    with pytest.raises(DimensionMismatchError):
        forward(linear_spec, np.zeros(4), np.zeros(2), 2)


# ---------- gradients ----------

def test_linear_gradient_is_feature_vector(rng, linear_spec):
    x = rng.normal(size=2)
    grad = grad_params(linear_spec, rng.normal(size=4), x, 1)
    assert np.array_equal(grad, feature_map(linear_spec, x, 1))


def test_mlp_gradient_matches_finite_differences(rng):
    spec = ModelSpec(kind="mlp", context_dim=2, arm_count=1, layer_widths=(3, 5, 1), activation="tanh")
    theta = rng.normal(size=spec.param_count)
    x = rng.normal(size=2)
    grad = grad_params(spec, theta, x, 0)
    fd = finite_difference(lambda t: forward(spec, t, x, 0), theta)
    assert np.allclose(grad, fd, rtol=1e-4, atol=1e-7)


def test_output_head_gradient_matches_finite_differences(rng):
    spec = ModelSpec(
        kind="mlp", context_dim=3, arm_count=4, layer_widths=(3, 6, 5, 4),
        activation="tanh", arm_encoding="output_head",
    )
    theta = rng.normal(size=spec.param_count)
    x = rng.normal(size=3)
    grad = grad_params(spec, theta, x, 2)
    fd = finite_difference(lambda t: forward(spec, t, x, 2), theta)
    assert np.allclose(grad, fd, rtol=1e-4, atol=1e-7)


def test_zero_last_layer_blocks_earlier_gradients(rng):
    spec = ModelSpec(kind="mlp", context_dim=2, arm_count=2, layer_widths=(4, 6, 1))
    theta = rng.normal(size=spec.param_count)
    theta[30:36] = 0.0  # last-layer weights
    grad = grad_params(spec, theta, rng.normal(size=2), 0)
    assert np.all(grad[:30] == 0.0)


def test_jacobian_rows_are_gradients(rng, tiny_mlp):
    theta = rng.normal(size=tiny_mlp.param_count)
    contexts = rng.normal(size=(4, 3))
    arms = np.array([0, 1, 1, 0])
    jac = jacobian(tiny_mlp, theta, contexts, arms)
    assert jac.shape == (4, tiny_mlp.param_count)
    for row, x, a in zip(jac, contexts, arms):
        assert np.allclose(row, grad_params(tiny_mlp, theta, x, a), atol=1e-14)


# ---------- losses ----------

def test_mse_single_point():
    spec = ModelSpec(kind="linear", context_dim=1, arm_count=1)
    assert mse(spec, np.zeros(1), [Transition(np.array([1.0]), 0, 2.0)]) == 4.0


def test_mse_perfect_fit_is_zero(rng, linear_spec):
    theta = rng.normal(size=4)
    data = random_data(rng, linear_spec, 30, theta)
    assert mse(linear_spec, theta, data) == pytest.approx(0.0, abs=1e-28)


def test_mse_matches_loop(rng, tiny_mlp):
    theta = rng.normal(size=tiny_mlp.param_count)
    data = random_data(rng, tiny_mlp, 25)
    expected = np.mean([(forward(tiny_mlp, theta, t.context, t.arm) - t.reward) ** 2 for t in data])
    assert mse(tiny_mlp, theta, data) == pytest.approx(expected, rel=1e-12)


def test_mse_empty_dataset_raises(linear_spec):
    with pytest.raises(EmptyDatasetError):
        mse(linear_spec, np.zeros(4), Dataset(2))


def test_regularizer_on_empty_dataset(linear_spec):
    theta = np.array([1.0, 1.0, 0.0, 0.0])
    value, grad = regularizer_value_and_grad(linear_spec, theta, Dataset(2), RegSpec())
    assert value == 0.0 and not np.any(grad)

    spec = ModelSpec(kind="linear", context_dim=1, arm_count=2)
    value, grad = regularizer_value_and_grad(spec, np.ones(2), Dataset(1), RegSpec(kind="ridge_plus_scaled_mse"))
    assert value == 2.0
    assert np.array_equal(grad, [2.0, 2.0])


def test_regularizer_gradient_matches_finite_differences(rng, tiny_mlp):
    theta = rng.normal(size=tiny_mlp.param_count)
    anchor = rng.normal(size=tiny_mlp.param_count)
    data = random_data(rng, tiny_mlp, 12)
    for reg in (RegSpec(), RegSpec(kind="ridge_plus_scaled_mse", ridge_weight=0.3),
                RegSpec(kind="anchored_ridge_plus_sse", ridge_weight=2.0)):
        _, grad = regularizer_value_and_grad(tiny_mlp, theta, data, reg, anchor_theta=anchor)
        fd = finite_difference(
            lambda t: regularizer_value_and_grad(tiny_mlp, t, data, reg, anchor_theta=anchor)[0], theta
        )
        assert np.allclose(grad, fd, rtol=1e-4, atol=1e-6)


def test_anchored_regularizer_requires_anchor(linear_spec):
    with pytest.raises(ConfigError):
        regularizer_value_and_grad(linear_spec, np.zeros(4), Dataset(2), RegSpec(kind="anchored_ridge_plus_sse"))


def test_minibatch_sse_is_rescaled(rng, linear_spec):
    theta = rng.normal(size=4)
    data = random_data(rng, linear_spec, 10)
    full, _ = sse_value_and_grad(linear_spec, theta, data)
    every, _ = sse_value_and_grad(linear_spec, theta, data, batch_indices=np.arange(10))
    assert every == pytest.approx(full, rel=1e-14)

    idx = np.array([0, 3])
    part, _ = sse_value_and_grad(linear_spec, theta, data, batch_indices=idx)
    sub, _ = sse_value_and_grad(linear_spec, theta, data.subset(idx))
    assert part == pytest.approx(5.0 * sub, rel=1e-14)


# ---------- training ----------

def test_zero_steps_returns_copy(rng, linear_spec):
    theta = rng.normal(size=4)
    out = train(linear_spec, theta, random_data(rng, linear_spec, 5), TrainConfig(steps=0))
    assert np.array_equal(out, theta) and out is not theta


def test_linear_training_reaches_least_squares(rng):
    spec = ModelSpec(kind="linear", context_dim=2, arm_count=1)
    theta_star = np.array([0.7, -1.3])
    data = random_data(rng, spec, 20, theta_star)
    theta = train(spec, np.zeros(2), data, TrainConfig(step_size=0.01, steps=500))
    assert mse(spec, theta, data) <= 1e-6
    assert np.allclose(theta, theta_star, atol=1e-3)


def test_full_batch_loss_is_nonincreasing(rng, linear_spec):
    data = random_data(rng, linear_spec, 40)
    trace = []
    train(linear_spec, np.zeros(4), data, TrainConfig(step_size=0.005, steps=50), trace=trace)
    assert len(trace) == 51
    assert np.all(np.diff(trace) <= 1e-12)


def test_mlp_training_reduces_loss(rng, tiny_mlp):
    data = random_data(rng, tiny_mlp, 20)
    trace = []
    train(tiny_mlp, init_params(tiny_mlp, 0), data,
          TrainConfig(step_size=0.05, steps=200, objective="mean"), trace=trace)
    assert trace[-1] < trace[0]


def test_minibatch_training_is_seeded(rng, tiny_mlp):
    data = random_data(rng, tiny_mlp, 30)
    cfg = TrainConfig(step_size=0.01, steps=10, batch_size=8)
    a = train(tiny_mlp, init_params(tiny_mlp, 0), data, cfg, seed=3)
    b = train(tiny_mlp, init_params(tiny_mlp, 0), data, cfg, seed=3)
    assert np.array_equal(a, b)


def test_divergent_training_raises(rng, linear_spec):
    data = random_data(rng, linear_spec, 40)
    with pytest.raises(NonFiniteError):
        train(linear_spec, np.zeros(4), data, TrainConfig(step_size=10.0, steps=500))


# ---------- ridge ----------

def test_ridge_fit_empty_dataset(linear_spec):
    assert np.array_equal(ridge_fit(linear_spec, Dataset(2)), np.zeros(4))


def test_ridge_fit_single_point():
    spec = ModelSpec(kind="linear", context_dim=2, arm_count=1)
    theta = ridge_fit(spec, [Transition(np.array([1.0, 0.0]), 0, 1.0)], lam=1.0)
    assert np.allclose(theta, [0.5, 0.0], atol=1e-15)


def test_ridge_fit_matches_gradient_descent(rng):
    spec = ModelSpec(kind="linear", context_dim=5, arm_count=1)
    data = random_data(rng, spec, 50, rng.normal(size=5), noise=0.1)
    exact = ridge_fit(spec, data, lam=1.0)
    gd = train(spec, np.zeros(5), data, TrainConfig(step_size=0.005, steps=2000, ridge_weight=1.0))
    assert np.allclose(exact, gd, atol=1e-5)


def test_ridge_fit_is_a_minimum(rng):
    spec = ModelSpec(kind="linear", context_dim=3, arm_count=1)
    data = random_data(rng, spec, 15)
    theta = ridge_fit(spec, data, lam=1.0)

    def objective(t):
        return float(t @ t) + sse_value_and_grad(spec, t, data)[0]

    base = objective(theta)
    for i in range(3):
        for sign in (1.0, -1.0):
            e = np.zeros(3)
            e[i] = sign * 1e-3
            assert objective(theta + e) >= base


def test_ridge_fit_rejects_mlp(tiny_mlp):
    with pytest.raises(ValueError):
        ridge_fit(tiny_mlp, Dataset(3))


# ---------- data ----------

def test_dataset_grows_past_capacity(rng):
    data = Dataset(2, capacity=2)
    for i in range(9):
        data.append(Transition(np.array([i, -i], dtype=float), i % 3, float(i)))
    assert len(data) == 9
    assert data[8].arm == 2 and data[8].reward == 8.0
    assert np.array_equal(data.contexts[:, 0], np.arange(9))
    assert [t.arm for t in data] == [i % 3 for i in range(9)]


def test_dataset_rejects_wrong_context_length():
    with pytest.raises(DimensionMismatchError):
        Dataset(2).append(Transition(np.zeros(3), 0, 0.0))


# ---------- checkpoints ----------

def test_checkpoint_roundtrip(tmp_path, rng):
    theta = rng.normal(size=17)
    path = save_params(tmp_path / "theta.bin", theta)
    assert path.stat().st_size == 16 + 8 * 17
    assert np.array_equal(load_params(path), theta)


def test_checkpoint_bad_magic(tmp_path):
    path = save_params(tmp_path / "theta.bin", np.ones(3))
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError):
        load_params(path)


def test_checkpoint_truncated(tmp_path):
    path = save_params(tmp_path / "theta.bin", np.ones(3))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(CheckpointError):
        load_params(path)


def test_checkpoint_refuses_non_finite(tmp_path):
    with pytest.raises(CheckpointError):
        save_params(tmp_path / "theta.bin", np.array([1.0, np.nan]))
