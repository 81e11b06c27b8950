"""Squared-error losses and the ROFU regularizers ℛ(θ; D)."""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.errors import ConfigError, EmptyDatasetError

from .data import DataLike, as_dataset
from .network import evaluate, forward_batch, pullback
from .spec import ModelSpec, ParamVector


class RegSpec(BaseModel):
    """Which ℛ the optimistic objective subtracts.

    scaled_mse               Σ (f − r)²   (|D|·MSE)
    ridge_plus_scaled_mse    ridge_weight·‖θ‖² + Σ (f − r)²
    anchored_ridge_plus_sse  ridge_weight·‖θ − anchor‖² + Σ (f − r)²
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["scaled_mse", "ridge_plus_scaled_mse", "anchored_ridge_plus_sse"] = "scaled_mse"
    ridge_weight: float = Field(default=1.0, ge=0)


def mse(spec: ModelSpec, theta: ParamVector, data: DataLike) -> float:
    data = as_dataset(data, spec.context_dim)
    if len(data) == 0:
        raise EmptyDatasetError("mse needs at least one transition")
    residual = forward_batch(spec, theta, data.contexts, data.arms) - data.rewards
    return float(np.mean(residual * residual))


def sse_value_and_grad(
    spec: ModelSpec,
    theta: ParamVector,
    data: DataLike,
    batch_indices: Optional[np.ndarray] = None,
) -> tuple[float, ParamVector]:
    """Σ (f − r)² and its gradient.

    With `batch_indices` the sum runs over the minibatch and is rescaled by
    |D| / batch so it stays an unbiased estimate of the full sum.
    """
    data = as_dataset(data, spec.context_dim)
    n = len(data)
    if n == 0:
        return 0.0, np.zeros(spec.param_count)

    contexts, arms, rewards = data.contexts, data.arms, data.rewards
    scale = 1.0
    if batch_indices is not None:
        batch_indices = np.asarray(batch_indices, dtype=np.int64)
        contexts, arms, rewards = contexts[batch_indices], arms[batch_indices], rewards[batch_indices]
        scale = n / len(batch_indices)

    values, cache = evaluate(spec, theta, contexts, arms)
    residual = values - rewards
    value = scale * float(residual @ residual)
    grad = scale * pullback(spec, theta, cache, 2.0 * residual)
    return value, grad


def regularizer_value_and_grad(
    spec: ModelSpec,
    theta: ParamVector,
    data: DataLike,
    reg: RegSpec,
    anchor_theta: Optional[ParamVector] = None,
    batch_indices: Optional[np.ndarray] = None,
) -> tuple[float, ParamVector]:
    """ℛ(θ; D) and ∇ℛ. An empty D leaves only the ridge term."""
    theta = np.asarray(theta, dtype=np.float64)
    value, grad = sse_value_and_grad(spec, theta, data, batch_indices)

    if reg.kind == "ridge_plus_scaled_mse":
        value += reg.ridge_weight * float(theta @ theta)
        grad = grad + 2.0 * reg.ridge_weight * theta
    elif reg.kind == "anchored_ridge_plus_sse":
        if anchor_theta is None:
            raise ConfigError("anchored_ridge_plus_sse needs an anchor parameter vector")
        delta = theta - np.asarray(anchor_theta, dtype=np.float64)
        value += reg.ridge_weight * float(delta @ delta)
        grad = grad + 2.0 * reg.ridge_weight * delta
    return value, grad
