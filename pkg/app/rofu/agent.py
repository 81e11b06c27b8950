"""Decision loop: score every arm optimistically, pick the best, learn from the reward."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from app.errors import ConfigError
from app.linalg import create_design, psd_solve, rank1_inverse_update
from app.models import (
    Dataset,
    ModelSpec,
    ParamVector,
    TrainConfig,
    Transition,
    feature_map,
    forward,
    init_params,
    train,
)

from .ascent import rofu_ucb_ascent
from .bonus import OfuEstimate, RofuConfig, select_action
from .closed_form import (
    ArmStats,
    NtkDesignMode,
    create_ntk_state,
    ntk_design_update,
    rofu_ucb_linucb,
    rofu_ucb_ntk_linearized,
    ucb1_value,
)

logger = logging.getLogger(__name__)

RofuPath = Literal["ascent", "linucb", "ucb1", "ntk"]

DEFAULT_GAMMA = 0.1


def round_seed(seed: int, round_index: int) -> int:
    """Per-round integer seed derived from an agent seed."""
    return int(np.random.SeedSequence([seed, round_index]).generate_state(1)[0])


@dataclass
class Decision:
    """Chosen arm plus the scores behind it."""
    arm: int
    ucb: float
    bonus: float
    estimates: list[OfuEstimate] = field(default_factory=list)
    forced: bool = False


class BanditAgent(ABC):
    """Holds θ_{t−1} and D_{t−1}; subclasses supply the per-arm scores.

    The first `arm_count` rounds pull arms 0, 1, ... in order so every arm
    has at least one observation before any score is computed.
    """

    def __init__(self, spec: ModelSpec, train_cfg: TrainConfig, seed: int = 0, train_seed: Optional[int] = None):
        self.spec = spec
        self.train_cfg = train_cfg
        self.seed = seed
        self.train_seed = seed if train_seed is None else train_seed
        self.theta0 = init_params(spec, seed)
        self.theta = self.theta0.copy()
        self.data = Dataset(spec.context_dim)
        self.round = 0

    @property
    def arm_count(self) -> int:
        return self.spec.arm_count

    def predict(self, context, arm: int) -> float:
        return forward(self.spec, self.theta, context, arm)

    @abstractmethod
    def score(self, context) -> list[OfuEstimate]:
        """Optimistic estimate for every arm at this context."""

    def decide(self, context) -> Decision:
        if self.round < self.arm_count:
            arm = self.round
            return Decision(arm=arm, ucb=self.predict(context, arm), bonus=0.0, forced=True)
        estimates = self.score(context)
        arm = select_action([e.ucb for e in estimates])
        chosen = estimates[arm]
        logger.debug("round %d: arm %d ucb=%.6g bonus=%.6g", self.round, arm, chosen.ucb, chosen.bonus)
        return Decision(arm=arm, ucb=chosen.ucb, bonus=chosen.bonus, estimates=estimates)

    def observe(self, context, arm: int, reward: float) -> None:
        context = np.asarray(context, dtype=np.float64).ravel()
        self.data.append(Transition(context, int(arm), float(reward)))
        self._commit(context, int(arm), float(reward))
        self.round += 1

    def _commit(self, context: np.ndarray, arm: int, reward: float) -> None:
        self.theta = self._retrain(self.theta)

    def _retrain(self, theta: ParamVector, cfg: Optional[TrainConfig] = None) -> ParamVector:
        return train(
            self.spec,
            theta,
            self.data,
            cfg or self.train_cfg,
            anchor_theta=self.theta0,
            seed=round_seed(self.train_seed, self.round),
        )


class RofuAgent(BanditAgent):
    """ROFU with the optimistic estimate computed along one of four paths.

    ascent  M gradient-ascent steps on f_θ − η·ℛ (any model)
    linucb  exact ridge θ and √(φᵀZ⁻¹φ) (linear and kernel_features models)
    ucb1    per-arm means and √(8 ln t / n_a) (one scalar per arm)
    ntk     linearized network, γ·√(hᵀZ⁻¹h / m)
    """

    def __init__(
        self,
        spec: ModelSpec,
        cfg: RofuConfig,
        train_cfg: TrainConfig,
        path: RofuPath = "ascent",
        seed: int = 0,
        train_seed: Optional[int] = None,
        lam: float = 1.0,
        gamma: float = DEFAULT_GAMMA,
        ntk_design: NtkDesignMode = "running",
    ):
        super().__init__(spec, train_cfg, seed, train_seed)
        self.cfg = cfg
        self.path = path
        self.lam = lam

        if path == "linucb":
            if spec.kind == "mlp":
                raise ConfigError("the linucb path needs a linear or kernel_features model")
            self.design = create_design(spec.feature_dim, lam)
            self.target = np.zeros(spec.feature_dim)
        elif path == "ucb1":
            if spec.kind != "linear" or spec.context_dim != 1 or spec.feature_map.kind != "disjoint_onehot":
                raise ConfigError("the ucb1 path needs a one-scalar-per-arm model (linear, context_dim 1)")
            self.stats = [ArmStats() for _ in range(spec.arm_count)]
        elif path == "ntk":
            if spec.kind != "mlp":
                raise ConfigError("the ntk path needs an mlp model")
            self.ntk = create_ntk_state(spec, self.theta0, lam=lam, gamma=gamma)
            self.ntk_design = ntk_design
            self.ntk_train_cfg = train_cfg.model_copy(
                update={"ridge_weight": spec.width * lam, "anchor": "init_point"}
            )

    def score(self, context) -> list[OfuEstimate]:
        if self.path == "linucb":
            return [
                rofu_ucb_linucb(feature_map(self.spec, context, a), self.theta, self.design)
                for a in range(self.arm_count)
            ]
        if self.path == "ucb1":
            t = len(self.data)
            return [ucb1_value(s, t) for s in self.stats]
        if self.path == "ntk":
            return [
                rofu_ucb_ntk_linearized(self.ntk, self.spec, context, a)
                for a in range(self.arm_count)
            ]

        seed = round_seed(self.seed, self.round)
        anchor = self.theta0 if self.cfg.reg.kind == "anchored_ridge_plus_sse" else None
        return [
            rofu_ucb_ascent(self.spec, self.theta, context, a, self.data, self.cfg, seed, anchor)
            for a in range(self.arm_count)
        ]

    def predict(self, context, arm: int) -> float:
        if self.path == "ucb1":
            return self.stats[arm].mean
        return super().predict(context, arm)

    def _commit(self, context: np.ndarray, arm: int, reward: float) -> None:
        if self.path == "linucb":
            phi = feature_map(self.spec, context, arm)
            rank1_inverse_update(self.design, phi, inplace=True)
            self.target += reward * phi
            self.theta = psd_solve(self.design.matrix, self.target)
        elif self.path == "ucb1":
            self.stats[arm].record(reward)
            self.theta[arm] = self.stats[arm].mean
        elif self.path == "ntk":
            # running folds in the gradient at the decision-time θ, recompute uses the retrained θ
            if self.ntk_design == "running":
                self.ntk = ntk_design_update(self.ntk, self.data, "running", self.spec)
            self.theta = self._retrain(self.theta, self.ntk_train_cfg)
            self.ntk.theta_prev = self.theta.copy()
            if self.ntk_design == "recompute_at_current":
                self.ntk = ntk_design_update(self.ntk, self.data, "recompute_at_current", self.spec)
        else:
            super()._commit(context, arm, reward)


def rofu_round(agent: BanditAgent, context) -> tuple[int, list[OfuEstimate]]:
    """One decision: (chosen arm, per-arm estimates; empty on forced rounds)."""
    decision = agent.decide(context)
    return decision.arm, decision.estimates
