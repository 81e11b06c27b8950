"""Closed-form optimistic estimates for models where the ascent has an exact maximizer.

* UCB1: one scalar per arm, η = 1/(16 ln t), ℛ = Σ(θ_a − r)².
* LinUCB / KernelUCB: feature models, η = 1/2, ℛ = ‖θ‖² + Σ(φᵀθ − r)².
* Linearized NTK: gradients at θ_{t−1} act as features, η = 1/(2γ²).
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.errors import DimensionMismatchError, UnpulledArmError
from app.linalg import (
    PsdInverseState,
    create_design,
    design_from_matrix,
    quad_form,
    rank1_inverse_update,
)
from app.models import DataLike, ModelSpec, ParamVector, as_dataset, jacobian, value_and_grad

from .bonus import OfuEstimate

logger = logging.getLogger(__name__)

NtkDesignMode = Literal["running", "recompute_at_current"]


@dataclass
class ArmStats:
    """Pull count and reward sum of one arm."""
    pulls: int = 0
    reward_sum: float = 0.0

    @property
    def mean(self) -> float:
        return self.reward_sum / self.pulls if self.pulls > 0 else 0.0

    def record(self, reward: float) -> None:
        self.pulls += 1
        self.reward_sum += float(reward)


def ucb1_eta(t: int) -> float:
    """Regularizer weight 1/(16 ln t) under which the optimistic estimate is UCB1."""
    return 1.0 / (16.0 * math.log(t))


def ucb1_value(stats: ArmStats, t: int) -> OfuEstimate:
    """θ̄_a + √(8 ln t / n_a), with θ̂_a = θ̄_a + 8 ln t / n_a."""
    if stats.pulls < 1:
        raise UnpulledArmError("UCB1 needs every arm pulled at least once")
    if t < 2:
        raise ValueError(f"UCB1 needs t >= 2, got {t}")
    width = 8.0 * math.log(t) / stats.pulls
    bonus = math.sqrt(width)
    mean = stats.mean
    return OfuEstimate(
        base_value=mean,
        optimistic_value=mean + width,
        bonus=bonus,
        ucb=mean + bonus,
    )


def rofu_ucb_linucb(phi, theta_ridge: ParamVector, design: PsdInverseState) -> OfuEstimate:
    """φᵀθ + √(φᵀZ⁻¹φ), with θ̂ = θ + Z⁻¹φ."""
    phi = np.asarray(phi, dtype=np.float64).ravel()
    theta_ridge = np.asarray(theta_ridge, dtype=np.float64)
    if phi.shape[0] != theta_ridge.shape[0] or phi.shape[0] != design.dim:
        raise DimensionMismatchError(
            f"φ has length {phi.shape[0]}, θ {theta_ridge.shape[0]}, design {design.dim}"
        )
    base = float(phi @ theta_ridge)
    q = quad_form(design, phi)
    bonus = math.sqrt(q)
    return OfuEstimate(base_value=base, optimistic_value=base + q, bonus=bonus, ucb=base + bonus)


@dataclass
class NtkState:
    """θ₀, θ_{t−1} and Z = λI + (1/m)Σhhᵀ for the linearized NTK estimate.

    `design_count` is how many transitions of D have been folded into the
    design (running mode appends only the ones after it).
    """
    theta0: ParamVector
    theta_prev: ParamVector
    design: PsdInverseState
    lam: float
    width_m: int
    gamma: float
    design_count: int = 0

    @property
    def eta(self) -> float:
        return 1.0 / (2.0 * self.gamma ** 2)

    def copy(self) -> "NtkState":
        return NtkState(
            theta0=self.theta0.copy(),
            theta_prev=self.theta_prev.copy(),
            design=self.design.copy(),
            lam=self.lam,
            width_m=self.width_m,
            gamma=self.gamma,
            design_count=self.design_count,
        )


def create_ntk_state(spec: ModelSpec, theta0: ParamVector, lam: float = 1.0, gamma: float = 0.1) -> NtkState:
    theta0 = np.asarray(theta0, dtype=np.float64)
    return NtkState(
        theta0=theta0.copy(),
        theta_prev=theta0.copy(),
        design=create_design(spec.param_count, lam),
        lam=lam,
        width_m=spec.width,
        gamma=gamma,
    )


def ntk_optimistic_params(state: NtkState, h: np.ndarray) -> ParamVector:
    """Closed-form θ̂ = θ_{t−1} + (1/(2ηm))·Z⁻¹h."""
    step = state.design.inverse @ h / (2.0 * state.eta * state.width_m)
    return state.theta_prev + step


def rofu_ucb_ntk_linearized(state: NtkState, spec: ModelSpec, context, arm: int) -> OfuEstimate:
    """f_{θ_{t−1}}(x, a) + γ·√(hᵀZ⁻¹h / m).

    optimistic_value is the linearized value at the closed-form θ̂, so
    √(optimistic − base) reproduces the bonus through a second path.
    """
    base, h = value_and_grad(spec, state.theta_prev, context, arm)
    if h.shape[0] != state.design.dim:
        raise DimensionMismatchError(f"gradient has length {h.shape[0]}, design is {state.design.dim}")
    q = quad_form(state.design, h)
    bonus = state.gamma * math.sqrt(q / state.width_m)
    theta_hat = ntk_optimistic_params(state, h)
    optimistic = base + float(h @ (theta_hat - state.theta_prev))
    return OfuEstimate(base_value=base, optimistic_value=optimistic, bonus=bonus, ucb=base + bonus)


def ntk_design_update(
    state: NtkState,
    data: DataLike,
    mode: NtkDesignMode,
    spec: ModelSpec,
) -> NtkState:
    """Bring Z up to date with D.

    recompute_at_current rebuilds Z from gradients all taken at θ_{t−1}.
    running folds in only the transitions added since the last call, with
    gradients at the current θ (the decision-time parameter when called
    before retraining).
    """
    data = as_dataset(data, spec.context_dim)
    new = state.copy()
    m = state.width_m

    if mode == "recompute_at_current":
        if len(data) == 0:
            new.design = create_design(spec.param_count, state.lam)
        else:
            H = jacobian(spec, state.theta_prev, data.contexts, data.arms)
            z = state.lam * np.eye(spec.param_count) + H.T @ H / m
            new.design = design_from_matrix(z)
        new.design_count = len(data)
        return new

    if len(data) > state.design_count:
        fresh = data.subset(np.arange(state.design_count, len(data)))
        H = jacobian(spec, state.theta_prev, fresh.contexts, fresh.arms)
        for h in H:
            rank1_inverse_update(new.design, h / math.sqrt(m), inplace=True)
    new.design_count = len(data)
    return new


def linearized_ascent(
    h: np.ndarray,
    H: np.ndarray,
    eta: float,
    m: int,
    lam: float,
    steps: int,
    step_size: float,
) -> tuple[np.ndarray, list[float]]:
    """Gradient ascent on ⟨h, Δ⟩ − η(Σ⟨hᵢ, Δ⟩² + mλ‖Δ‖²) from Δ = 0.

    Its maximizer is the closed-form θ̂ − θ_{t−1}. Returns Δ and the
    objective before each step followed by the final value.
    """
    h = np.asarray(h, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64).reshape(-1, h.shape[0])

    def objective(delta: np.ndarray) -> float:
        proj = H @ delta
        return float(h @ delta - eta * (proj @ proj + m * lam * (delta @ delta)))

    delta = np.zeros_like(h)
    trace = []
    for _ in range(steps):
        trace.append(objective(delta))
        grad = h - 2.0 * eta * (H.T @ (H @ delta) + m * lam * delta)
        delta = delta + step_size * grad
    trace.append(objective(delta))
    return delta, trace
