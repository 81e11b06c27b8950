"""NeuralUCB with the full running design Z̃ or its diagonal approximation."""

import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.errors import DimensionMismatchError
from app.linalg import PsdInverseState, create_design, quad_form, rank1_inverse_update
from app.models import ModelSpec, ParamVector, TrainConfig, value_and_grad
from app.rofu import BanditAgent, OfuEstimate
from app.rofu.agent import DEFAULT_GAMMA


class BaselineConfig(BaseModel):
    """Settings shared by the comparison agents."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["epsilon_greedy", "greedy", "neural_ucb_full", "neural_ucb_diag"]
    epsilon: float = Field(default=0.05, ge=0, le=1)
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    lam: float = Field(default=1.0, gt=0)
    train: TrainConfig = TrainConfig()


@dataclass
class DiagonalDesign:
    """diag(Z̃) = λ + (1/m)Σh², the acceleration NeuralUCB uses for wide nets."""
    diag: np.ndarray

    @classmethod
    def create(cls, dim: int, lam: float = 1.0) -> "DiagonalDesign":
        return cls(diag=np.full(dim, float(lam)))

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def update(self, u: np.ndarray) -> None:
        self.diag += np.asarray(u, dtype=np.float64) ** 2

    def quad_form(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.float64).ravel()
        if v.shape[0] != self.dim:
            raise DimensionMismatchError(f"vector has length {v.shape[0]}, design is {self.dim}")
        return float(np.sum(v * v / self.diag))


Design = Union[PsdInverseState, DiagonalDesign]


def _design_quad_form(design: Design, v: np.ndarray) -> float:
    if isinstance(design, DiagonalDesign):
        return design.quad_form(v)
    return quad_form(design, v)


def neural_ucb_estimate(
    spec: ModelSpec,
    theta_prev: ParamVector,
    context,
    arm: int,
    design: Design,
    gamma: float,
    m: int,
) -> OfuEstimate:
    """Bonus γ·√(hᵀZ̃⁻¹h / m) around f_{θ_{t−1}}(x, a).

    optimistic_value is f + bonus², so bonus = √(optimistic − base) as for ROFU rows.
    """
    f, h = value_and_grad(spec, theta_prev, context, arm)
    bonus = gamma * math.sqrt(max(0.0, _design_quad_form(design, h)) / m)
    return OfuEstimate(base_value=f, optimistic_value=f + bonus * bonus, bonus=bonus, ucb=f + bonus)


def neural_ucb_value(
    spec: ModelSpec,
    theta_prev: ParamVector,
    context,
    arm: int,
    design: Design,
    gamma: float,
    m: int,
) -> float:
    """f_{θ_{t−1}}(x, a) + γ·√(hᵀZ̃⁻¹h / m)."""
    return neural_ucb_estimate(spec, theta_prev, context, arm, design, gamma, m).ucb


class NeuralUcbAgent(BanditAgent):
    """NeuralUCB: anchored training plus a design of decision-time gradients."""

    def __init__(
        self,
        spec: ModelSpec,
        train_cfg: TrainConfig,
        variant: Literal["full", "diag"] = "full",
        gamma: float = DEFAULT_GAMMA,
        lam: float = 1.0,
        seed: int = 0,
        train_seed: Optional[int] = None,
    ):
        super().__init__(spec, train_cfg, seed, train_seed)
        self.variant = variant
        self.gamma = gamma
        self.lam = lam
        self.m = spec.width
        if variant == "full":
            self.design: Design = create_design(spec.param_count, lam)
        else:
            self.design = DiagonalDesign.create(spec.param_count, lam)
        self.anchored_cfg = train_cfg.model_copy(
            update={"ridge_weight": self.m * lam, "anchor": "init_point"}
        )

    def score(self, context) -> list[OfuEstimate]:
        return [
            neural_ucb_estimate(self.spec, self.theta, context, a, self.design, self.gamma, self.m)
            for a in range(self.arm_count)
        ]

    def _commit(self, context: np.ndarray, arm: int, reward: float) -> None:
        _, h = value_and_grad(self.spec, self.theta, context, arm)
        u = h / math.sqrt(self.m)
        if isinstance(self.design, DiagonalDesign):
            self.design.update(u)
        else:
            rank1_inverse_update(self.design, u, inplace=True)
        self.theta = self._retrain(self.theta, self.anchored_cfg)
