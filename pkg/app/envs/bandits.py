"""Simulated bandit environments with counter-keyed randomness.

Contexts are a function of (seed, round) and noise of (seed, round, arm, k)
only, so two agents run on the same seed see the same world no matter
which arms they pull.
"""

import logging
from typing import Optional

import numpy as np

from app.errors import DimensionMismatchError, ExhaustedError
from app.models import ParamVector, arm_values, forward, init_params

from .spec import EnvSpec

logger = logging.getLogger(__name__)

# stream labels
CONTEXT_KEY = 1
NOISE_KEY = 2
PARAM_KEY = 3
SHUFFLE_KEY = 4


class EnvState:
    """A running environment: spec, seed, current round and (for datasets) the rows."""

    def __init__(
        self,
        spec: EnvSpec,
        seed: int,
        theta_star: Optional[ParamVector] = None,
        features: Optional[np.ndarray] = None,
        labels: Optional[np.ndarray] = None,
    ):
        self.spec = spec
        self.seed = int(seed)
        self.round = 0
        self.features = features
        self.labels = labels
        self.model = spec.generator_model
        self.theta_star = theta_star
        if self.model is not None and self.theta_star is None:
            self.theta_star = self._draw_theta_star()
        self._draws: dict[int, int] = {}
        self._context: Optional[np.ndarray] = None

    def _draw_theta_star(self) -> ParamVector:
        if self.spec.theta_star is not None:
            theta = np.asarray(self.spec.theta_star, dtype=np.float64)
            if theta.shape[0] != self.model.param_count:
                raise DimensionMismatchError(
                    f"theta_star has length {theta.shape[0]}, generator expects {self.model.param_count}"
                )
            return theta
        key = int(np.random.SeedSequence([self.seed, PARAM_KEY]).generate_state(1)[0])
        if self.model.kind == "mlp":
            return init_params(self.model, key)
        rng = np.random.default_rng(key)
        scale = 1.0 / np.sqrt(self.spec.context_dim) if self.model.kind == "linear" else 1.0
        return rng.normal(0.0, scale, size=self.model.param_count)

    @property
    def row_count(self) -> Optional[int]:
        return None if self.labels is None else int(self.labels.shape[0])

    def context_at(self, round_index: int) -> np.ndarray:
        spec = self.spec
        if spec.kind == "dataset":
            if round_index >= self.row_count:
                raise ExhaustedError(f"dataset has {self.row_count} rows, round {round_index} requested")
            return self.features[round_index].copy()
        if spec.kind == "mab":
            return np.ones(1)
        rng = np.random.default_rng([self.seed, CONTEXT_KEY, round_index])
        if spec.context_law == "uniform":
            return rng.uniform(-1.0, 1.0, size=spec.context_dim)
        return rng.standard_normal(spec.context_dim)

    def context(self) -> np.ndarray:
        if self._context is None:
            self._context = self.context_at(self.round)
        return self._context.copy()

    def means_at(self, context, round_index: Optional[int] = None) -> np.ndarray:
        """True mean of every arm; dataset rows are addressed by round."""
        spec = self.spec
        if spec.kind == "mab":
            return np.asarray(spec.means, dtype=np.float64)
        if spec.kind == "dataset":
            row = self.round if round_index is None else round_index
            out = np.zeros(spec.arm_count)
            out[int(self.labels[row])] = 1.0
            return out
        return arm_values(self.model, self.theta_star, context)

    def mean(self, context, arm: int) -> float:
        spec = self.spec
        if not 0 <= arm < spec.arm_count:
            raise DimensionMismatchError(f"arm {arm} outside [0, {spec.arm_count})")
        if spec.kind == "mab":
            return float(spec.means[arm])
        if spec.kind == "dataset":
            return 1.0 if int(self.labels[self.round]) == arm else 0.0
        return forward(self.model, self.theta_star, context, arm)

    def reward(self, context, arm: int) -> float:
        mean = self.mean(context, arm)
        if self.spec.noise_std == 0:
            return mean
        k = self._draws.get(arm, 0)
        self._draws[arm] = k + 1
        rng = np.random.default_rng([self.seed, NOISE_KEY, self.round, arm, k])
        return mean + self.spec.noise_std * float(rng.standard_normal())

    def advance(self) -> None:
        self.round += 1
        self._draws.clear()
        self._context = None


def env_context(state: EnvState) -> np.ndarray:
    """Context of the current round."""
    return state.context()


def env_mean(state: EnvState, context, arm: int) -> float:
    return state.mean(context, arm)


def env_reward(state: EnvState, context, arm: int) -> float:
    """Mean plus Gaussian noise from the (round, arm, k) stream."""
    return state.reward(context, arm)


def make_env(spec: EnvSpec, seed: int) -> EnvState:
    """Build the environment a spec describes."""
    if spec.kind == "dataset":
        from .dataset import load_dataset_bandit

        return load_dataset_bandit(spec.dataset.path, spec.dataset, seed, noise_std=spec.noise_std)
    return EnvState(spec, seed)


def mlp_sim_spec(deep: bool = False, noise_std: float = 0.05, context_law: str = "gaussian") -> EnvSpec:
    """10-dimensional contexts, 10 arms, N(0, 0.05) noise, random generator network."""
    return EnvSpec(
        kind="mlp_sim",
        arm_count=10,
        context_dim=10,
        noise_std=noise_std,
        context_law=context_law,
        deep=deep,
    )


def make_mlp_sim(seed: int, deep: bool = False) -> EnvState:
    state = EnvState(mlp_sim_spec(deep=deep), seed)
    logger.debug("mlp_sim generator with %d parameters (seed %d)", state.model.param_count, seed)
    return state
