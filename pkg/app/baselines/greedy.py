"""Greedy and ε-greedy agents."""

from typing import Optional, Sequence

import numpy as np

from app.models import ModelSpec, ParamVector, TrainConfig, arm_values
from app.rofu import BanditAgent, Decision, OfuEstimate


def _explore_or_argmax(values: Sequence[float], arm_count: int, epsilon: float, seed: int, round_index: int) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    rng = np.random.default_rng([seed, round_index])
    if rng.random() < epsilon:
        return int(rng.integers(arm_count))
    return int(np.argmax(values))


def epsilon_greedy_select(
    spec: ModelSpec,
    theta: ParamVector,
    context,
    arm_count: int,
    epsilon: float,
    seed: int,
    round_index: int = 0,
) -> int:
    """Uniform arm with probability ε, else argmax of f_θ (lowest index on ties)."""
    return _explore_or_argmax(arm_values(spec, theta, context), arm_count, epsilon, seed, round_index)


class GreedyAgent(BanditAgent):
    """Plays argmax f_θ, exploring uniformly with probability ε (ε = 0 is pure greedy)."""

    def __init__(
        self,
        spec: ModelSpec,
        train_cfg: TrainConfig,
        epsilon: float = 0.0,
        seed: int = 0,
        train_seed: Optional[int] = None,
    ):
        super().__init__(spec, train_cfg, seed, train_seed)
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
        self.epsilon = epsilon

    def score(self, context) -> list[OfuEstimate]:
        values = arm_values(self.spec, self.theta, context)
        return [OfuEstimate(base_value=v, optimistic_value=v, bonus=0.0, ucb=v) for v in map(float, values)]

    def decide(self, context) -> Decision:
        if self.round < self.arm_count:
            return super().decide(context)
        estimates = self.score(context)
        arm = _explore_or_argmax([e.ucb for e in estimates], self.arm_count, self.epsilon, self.seed, self.round)
        return Decision(arm=arm, ucb=estimates[arm].ucb, bonus=0.0, estimates=estimates)
