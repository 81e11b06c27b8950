"""M-step gradient ascent on f_θ(x, a) − η·ℛ(θ; D) starting from θ_{t−1}."""

from typing import NamedTuple, Optional

import numpy as np

from app.errors import NonFiniteError
from app.models import (
    DataLike,
    ModelSpec,
    ParamVector,
    as_dataset,
    regularizer_value_and_grad,
    value_and_grad,
)

from .bonus import OfuEstimate, RofuConfig, combine_bonus


class RegCenter(NamedTuple):
    """ℛ and ∇ℛ at θ_{t−1}, on the same data the ascent step uses."""
    theta: ParamVector
    value: float
    grad: ParamVector


def regularizer_center(
    spec: ModelSpec,
    theta_prev: ParamVector,
    data,
    cfg: RofuConfig,
    anchor_theta: Optional[ParamVector] = None,
    batch_indices: Optional[np.ndarray] = None,
) -> RegCenter:
    value, grad = regularizer_value_and_grad(spec, theta_prev, data, cfg.reg, anchor_theta, batch_indices)
    return RegCenter(np.asarray(theta_prev, dtype=np.float64), value, grad)


def ascent_objective(
    spec: ModelSpec,
    theta: ParamVector,
    context,
    arm: int,
    data,
    cfg: RofuConfig,
    anchor_theta: Optional[ParamVector] = None,
    batch_indices: Optional[np.ndarray] = None,
    center: Optional[RegCenter] = None,
) -> tuple[float, float, ParamVector]:
    """(f_θ(x, a), objective, gradient of the objective).

    With `center`, ℛ is replaced by its Bregman divergence from the center:
    ℛ(θ) − ℛ(θ_c) − ⟨∇ℛ(θ_c), θ − θ_c⟩.
    """
    f, h = value_and_grad(spec, theta, context, arm)
    r, r_grad = regularizer_value_and_grad(spec, theta, data, cfg.reg, anchor_theta, batch_indices)
    if center is not None:
        r = r - center.value - float(center.grad @ (np.asarray(theta) - center.theta))
        r_grad = r_grad - center.grad
    return f, f - cfg.eta * r, h - cfg.eta * r_grad


def rofu_ucb_ascent(
    spec: ModelSpec,
    theta_prev: ParamVector,
    context,
    arm: int,
    data: DataLike,
    cfg: RofuConfig,
    seed: int = 0,
    anchor_theta: Optional[ParamVector] = None,
) -> OfuEstimate:
    """Approximate the optimistic estimate with `cfg.ascent_steps` ascent steps.

    Minibatches (when the batch policy calls for them) are redrawn every
    step from a stream keyed by (seed, arm). The trace holds the objective
    at each iterate, M + 1 values in total.

    With `cfg.center_at_prev` the first step is exactly κ·∇f, whatever
    residual gradient training left at θ_{t−1}; minibatch steps center on
    the same minibatch evaluated at θ_{t−1}.
    """
    data = as_dataset(data, spec.context_dim)
    theta0 = np.array(theta_prev, dtype=np.float64, copy=True)
    theta = theta0.copy()
    n = len(data)
    batch_size = cfg.batch_size_for(n)
    kappa = cfg.step_size_for(n)
    rng = np.random.default_rng([seed, arm])

    center = None
    if cfg.center_at_prev and (batch_size is None or n == 0):
        center = regularizer_center(spec, theta0, data, cfg, anchor_theta)

    trace: list[float] = []
    base = None
    f = 0.0
    for step in range(cfg.ascent_steps + 1):
        batch = None
        if batch_size is not None and n > 0:
            batch = rng.choice(n, size=batch_size, replace=False)
            if cfg.center_at_prev:
                center = regularizer_center(spec, theta0, data, cfg, anchor_theta, batch)
        f, value, grad = ascent_objective(spec, theta, context, arm, data, cfg, anchor_theta, batch, center)
        if base is None:
            base = f
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NonFiniteError(
                f"ascent objective diverged at step {step} for arm {arm} (κ={kappa:.3e})"
            )
        trace.append(value)
        if step < cfg.ascent_steps:
            theta += kappa * grad

    estimate = combine_bonus(base, f, cfg.g_exponent)
    estimate.ascent_trace = trace
    return estimate
