"""Warm-start training of θ and the exact ridge solution for feature models."""

import logging
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.errors import NonFiniteError
from app.linalg import psd_solve

from .data import DataLike, as_dataset
from .features import feature_matrix
from .loss import sse_value_and_grad
from .spec import ModelSpec, ParamVector

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Gradient-descent settings for fitting θ to D.

    The objective is Σ(f − r)² + ridge_weight·‖θ‖² (or ‖θ − θ₀‖² with
    anchor="init_point"). objective="mean" divides it by |D|, which keeps a
    fixed step size stable as the dataset grows.
    """
    model_config = ConfigDict(frozen=True)

    step_size: float = Field(default=0.01, gt=0)
    steps: int = Field(default=20, ge=0)
    batch_size: Union[int, Literal["full"]] = "full"
    ridge_weight: float = Field(default=0.0, ge=0)
    anchor: Literal["none", "init_point"] = "none"
    objective: Literal["sum", "mean"] = "sum"


def _batch_indices(n: int, batch_size, rng: np.random.Generator) -> Optional[np.ndarray]:
    if batch_size == "full" or batch_size >= n:
        return None
    return rng.choice(n, size=int(batch_size), replace=False)


def training_loss(
    spec: ModelSpec,
    theta: ParamVector,
    data: DataLike,
    cfg: TrainConfig,
    anchor_theta: Optional[ParamVector] = None,
    batch_indices: Optional[np.ndarray] = None,
) -> tuple[float, ParamVector]:
    """Training objective and gradient for one step."""
    data = as_dataset(data, spec.context_dim)
    value, grad = sse_value_and_grad(spec, theta, data, batch_indices)

    if cfg.ridge_weight > 0:
        center = anchor_theta if cfg.anchor == "init_point" and anchor_theta is not None else 0.0
        delta = np.asarray(theta, dtype=np.float64) - center
        value += cfg.ridge_weight * float(delta @ delta)
        grad = grad + 2.0 * cfg.ridge_weight * delta

    if cfg.objective == "mean" and len(data) > 0:
        value /= len(data)
        grad = grad / len(data)
    return value, grad


def train(
    spec: ModelSpec,
    theta_init: ParamVector,
    data: DataLike,
    cfg: TrainConfig,
    anchor_theta: Optional[ParamVector] = None,
    seed: int = 0,
    trace: Optional[list] = None,
) -> ParamVector:
    """Run `cfg.steps` gradient steps from `theta_init`.

    If `trace` is given it receives the loss before every step followed by
    the final loss. Minibatches are drawn from `seed`.
    """
    theta = np.array(theta_init, dtype=np.float64, copy=True)
    if cfg.steps == 0:
        return theta

    data = as_dataset(data, spec.context_dim)
    if len(data) == 0 and cfg.ridge_weight == 0:
        return theta
    if cfg.anchor == "init_point" and anchor_theta is None:
        anchor_theta = np.array(theta_init, dtype=np.float64, copy=True)

    rng = np.random.default_rng(seed)
    for step in range(cfg.steps):
        batch = _batch_indices(len(data), cfg.batch_size, rng)
        value, grad = training_loss(spec, theta, data, cfg, anchor_theta, batch)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"training loss diverged at step {step} (step_size={cfg.step_size})")
        if trace is not None:
            trace.append(value)
        theta -= cfg.step_size * grad

    if trace is not None:
        final, _ = training_loss(spec, theta, data, cfg, anchor_theta)
        if not np.isfinite(final):
            raise NonFiniteError(f"training loss diverged after {cfg.steps} steps (step_size={cfg.step_size})")
        trace.append(final)
    elif not np.all(np.isfinite(theta)):
        raise NonFiniteError(f"parameters diverged after {cfg.steps} steps (step_size={cfg.step_size})")

    logger.debug("trained %d steps on %d transitions", cfg.steps, len(data))
    return theta


def design_and_target(spec: ModelSpec, data: DataLike, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """λI + ΦᵀΦ and Φᵀr for a feature model."""
    data = as_dataset(data, spec.context_dim)
    dim = spec.feature_dim
    if len(data) == 0:
        return lam * np.eye(dim), np.zeros(dim)
    phi = feature_matrix(spec, data.contexts, data.arms)
    return lam * np.eye(dim) + phi.T @ phi, phi.T @ data.rewards


def ridge_fit(spec: ModelSpec, data: DataLike, lam: float = 1.0) -> ParamVector:
    """Exact ridge solution (λI + ΣφφT)⁻¹ Σφr."""
    if spec.kind == "mlp":
        raise ValueError("ridge_fit needs a linear or kernel_features model")
    z, b = design_and_target(spec, data, lam)
    if not np.any(b):
        return np.zeros(spec.feature_dim)
    theta = psd_solve(z, b)
    residual = np.max(np.abs(z @ theta - b))
    if residual > 1e-8 * (1.0 + np.max(np.abs(b))):
        logger.warning("ridge_fit residual %.3e exceeds tolerance", residual)
    return theta
