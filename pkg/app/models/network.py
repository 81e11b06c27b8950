"""Forward passes and exact parameter gradients for every model kind.

Feature models are f_θ(x, a) = φ(x, a)ᵀθ. MLPs are hand-differentiated layer
by layer: hidden layers are affine + activation, the output layer is affine.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import DimensionMismatchError

from .features import arm_onehot, feature_matrix
from .spec import ModelSpec, ParamVector, layer_offsets


@dataclass
class ForwardCache:
    """Intermediates kept by `evaluate` for a later `pullback`."""
    arms: np.ndarray
    features: Optional[np.ndarray] = None      # feature models
    activations: Optional[list] = None         # mlp: inputs to each layer
    pre_activations: Optional[list] = None     # mlp: hidden pre-activations


def _check_theta(spec: ModelSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.shape[0] != spec.param_count:
        raise DimensionMismatchError(
            f"θ has shape {theta.shape}, {spec.kind} model expects ({spec.param_count},)"
        )
    return theta


def _check_batch(spec: ModelSpec, contexts, arms) -> tuple[np.ndarray, np.ndarray]:
    contexts = np.asarray(contexts, dtype=np.float64)
    arms = np.asarray(arms, dtype=np.int64)
    if contexts.ndim != 2 or contexts.shape[1] != spec.context_dim:
        raise DimensionMismatchError(
            f"contexts have shape {contexts.shape}, model expects (n, {spec.context_dim})"
        )
    if arms.shape != (contexts.shape[0],):
        raise DimensionMismatchError(f"{arms.shape[0]} arms for {contexts.shape[0]} contexts")
    if arms.size and (arms.min() < 0 or arms.max() >= spec.arm_count):
        raise DimensionMismatchError(f"arm index outside [0, {spec.arm_count})")
    return contexts, arms


def _layers(spec: ModelSpec, theta: np.ndarray):
    for (out_dim, in_dim), (w0, b0, end) in zip(spec.layer_shapes, layer_offsets(spec)):
        yield theta[w0:b0].reshape(out_dim, in_dim), theta[b0:end]


def _activate(spec: ModelSpec, z: np.ndarray) -> np.ndarray:
    if spec.activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_slope(spec: ModelSpec, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    if spec.activation == "relu":
        return (z > 0).astype(np.float64)
    return 1.0 - h * h


def _network_inputs(spec: ModelSpec, contexts: np.ndarray, arms: np.ndarray) -> np.ndarray:
    if spec.arm_encoding == "onehot_input":
        return np.hstack([contexts, arm_onehot(arms, spec.arm_count)])
    return contexts


def _mlp_outputs(spec: ModelSpec, theta: np.ndarray, inputs: np.ndarray):
    h = inputs
    activations, pre = [h], []
    layers = list(_layers(spec, theta))
    for W, b in layers[:-1]:
        z = h @ W.T + b
        h = _activate(spec, z)
        pre.append(z)
        activations.append(h)
    W, b = layers[-1]
    return h @ W.T + b, activations, pre


def evaluate(spec: ModelSpec, theta, contexts, arms) -> tuple[np.ndarray, ForwardCache]:
    """Batched forward pass returning f values and the cache for `pullback`."""
    theta = _check_theta(spec, theta)
    contexts, arms = _check_batch(spec, contexts, arms)

    if spec.kind != "mlp":
        phi = feature_matrix(spec, contexts, arms)
        return phi @ theta, ForwardCache(arms=arms, features=phi)

    out, activations, pre = _mlp_outputs(spec, theta, _network_inputs(spec, contexts, arms))
    if spec.arm_encoding == "output_head":
        values = out[np.arange(out.shape[0]), arms]
    else:
        values = out[:, 0]
    return values, ForwardCache(arms=arms, activations=activations, pre_activations=pre)


def _output_seed(spec: ModelSpec, cache: ForwardCache, upstream: np.ndarray) -> np.ndarray:
    n = upstream.shape[0]
    out_dim = spec.layer_widths[-1]
    seed = np.zeros((n, out_dim))
    col = cache.arms if spec.arm_encoding == "output_head" else np.zeros(n, dtype=np.int64)
    seed[np.arange(n), col] = upstream
    return seed


def pullback(spec: ModelSpec, theta, cache: ForwardCache, upstream) -> ParamVector:
    """Σ_i upstream_i · ∇_θ f(x_i, a_i) for the batch held in `cache`."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if spec.kind != "mlp":
        return cache.features.T @ upstream

    theta = np.asarray(theta, dtype=np.float64)
    layers = list(_layers(spec, theta))
    offsets = layer_offsets(spec)
    grad = np.zeros(spec.param_count)
    delta = _output_seed(spec, cache, upstream)
    for ell in range(len(layers) - 1, -1, -1):
        w0, b0, end = offsets[ell]
        h_prev = cache.activations[ell]
        grad[w0:b0] = (delta.T @ h_prev).ravel()
        grad[b0:end] = delta.sum(axis=0)
        if ell == 0:
            break
        W, _ = layers[ell]
        z = cache.pre_activations[ell - 1]
        delta = (delta @ W) * _activation_slope(spec, z, h_prev)
    return grad


def jacobian(spec: ModelSpec, theta, contexts, arms) -> np.ndarray:
    """Per-sample gradients stacked as rows, shape (n, p)."""
    _, cache = evaluate(spec, theta, contexts, arms)
    if spec.kind != "mlp":
        return cache.features.copy()

    theta = np.asarray(theta, dtype=np.float64)
    layers = list(_layers(spec, theta))
    offsets = layer_offsets(spec)
    n = cache.arms.shape[0]
    jac = np.zeros((n, spec.param_count))
    delta = _output_seed(spec, cache, np.ones(n))
    for ell in range(len(layers) - 1, -1, -1):
        w0, b0, end = offsets[ell]
        h_prev = cache.activations[ell]
        jac[:, w0:b0] = (delta[:, :, None] * h_prev[:, None, :]).reshape(n, -1)
        jac[:, b0:end] = delta
        if ell == 0:
            break
        W, _ = layers[ell]
        z = cache.pre_activations[ell - 1]
        delta = (delta @ W) * _activation_slope(spec, z, h_prev)
    return jac


def forward_batch(spec: ModelSpec, theta, contexts, arms) -> np.ndarray:
    return evaluate(spec, theta, contexts, arms)[0]


def _single(spec: ModelSpec, context, arm) -> tuple[np.ndarray, np.ndarray]:
    context = np.asarray(context, dtype=np.float64).ravel()
    if context.shape[0] != spec.context_dim:
        raise DimensionMismatchError(
            f"context has length {context.shape[0]}, model expects {spec.context_dim}"
        )
    return context[None, :], np.array([int(arm)])


def forward(spec: ModelSpec, theta, context, arm: int) -> float:
    """f_θ(x, a)."""
    values, _ = evaluate(spec, theta, *_single(spec, context, arm))
    return float(values[0])


def grad_params(spec: ModelSpec, theta, context, arm: int) -> ParamVector:
    """∇_θ f_θ(x, a)."""
    _, cache = evaluate(spec, theta, *_single(spec, context, arm))
    return pullback(spec, theta, cache, np.ones(1))


def value_and_grad(spec: ModelSpec, theta, context, arm: int) -> tuple[float, ParamVector]:
    values, cache = evaluate(spec, theta, *_single(spec, context, arm))
    return float(values[0]), pullback(spec, theta, cache, np.ones(1))


def arm_values(spec: ModelSpec, theta, context) -> np.ndarray:
    """f_θ(x, a) for every arm at one context."""
    context = np.asarray(context, dtype=np.float64).ravel()
    k = spec.arm_count
    return forward_batch(spec, theta, np.tile(context, (k, 1)), np.arange(k))


def min_abs_preactivation(spec: ModelSpec, theta, context, arm: int) -> float:
    """Distance of the nearest hidden unit to its activation kink (inf for feature models)."""
    if spec.kind != "mlp":
        return float("inf")
    _, cache = evaluate(spec, theta, *_single(spec, context, arm))
    if not cache.pre_activations:
        return float("inf")
    return float(min(np.min(np.abs(z)) for z in cache.pre_activations))
