"""Regret decomposition against an offline model, and seed aggregation."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from app.envs import EnvSpec, EnvState, make_env
from app.errors import FingerprintMismatchError
from app.models import Dataset, ModelSpec, ParamVector, TrainConfig, Transition, arm_values, init_params, train
from app.rofu.bonus import FULL_BATCH_LIMIT, MINIBATCH_SIZE

from .agents import AgentSpec, agent_model
from .runner import RunResult, derive_seed

logger = logging.getLogger(__name__)

OFFLINE_STEPS = 2000


def regret_decomposition(run: RunResult, theta_prime: ParamVector, model: ModelSpec) -> tuple[float, float]:
    """Split total regret into (offline-model regret I, exploration regret II).

    a′_t is the arm the offline model θ′ prefers at x_t. Regret I sums
    best mean − mean(a′_t), regret II sums mean(a′_t) − mean(a_t).
    """
    best = run.arm_means.max(axis=1)
    rows = np.arange(run.horizon)
    offline_arms = np.array(
        [int(np.argmax(arm_values(model, theta_prime, x))) for x in run.contexts], dtype=np.int64
    )
    offline_means = run.arm_means[rows, offline_arms]
    chosen_means = run.arm_means[rows, run.arms]
    return float(np.sum(best - offline_means)), float(np.sum(offline_means - chosen_means))


def virtual_dataset(env: EnvState, horizon: int) -> Dataset:
    """Every (context, arm) pair of T contexts (all rows for datasets), labeled with the true mean."""
    count = env.row_count if env.row_count is not None else horizon
    data = Dataset(env.spec.context_dim, capacity=count * env.spec.arm_count)
    for i in range(count):
        x = env.context_at(i)
        for a, mean in enumerate(env.means_at(x, round_index=i)):
            data.append(Transition(x, a, float(mean)))
    return data


def fit_offline_model(
    env_spec: EnvSpec,
    agent_spec: AgentSpec,
    horizon: int,
    seed: int,
    offline_steps: int = OFFLINE_STEPS,
) -> tuple[ModelSpec, ParamVector]:
    """θ′ trained on the virtual dataset from the agent's initialization.

    Uses the agent's step size with a mean-squared objective; large virtual
    datasets are trained in minibatches.
    """
    env = make_env(env_spec, derive_seed(seed, "offline"))
    model = agent_model(agent_spec, env.spec)
    data = virtual_dataset(env, horizon)
    batch = agent_spec.train.batch_size
    if batch == "full" and len(data) > FULL_BATCH_LIMIT:
        batch = MINIBATCH_SIZE
    cfg = TrainConfig(
        step_size=agent_spec.train.step_size,
        steps=offline_steps,
        batch_size=batch,
        objective="mean",
    )
    theta = train(
        model,
        init_params(model, derive_seed(seed, "agent")),
        data,
        cfg,
        seed=derive_seed(seed, "offline"),
    )
    logger.info("offline model for %s: %d steps on %d points", agent_spec.name, offline_steps, len(data))
    return model, theta


@dataclass
class AggregateResult:
    """Pointwise mean and sample std across seeds."""
    agent_name: str
    env_fingerprint: str
    agent_fingerprint: str
    seeds: list[int]
    mean_regret: np.ndarray
    std_regret: np.ndarray
    mean_bonus: np.ndarray
    final_regrets: list[float]
    wall_time_ms: float
    decomposition: Optional[list[tuple[float, float]]] = field(default=None)

    @property
    def horizon(self) -> int:
        return int(self.mean_regret.shape[0])

    def __str__(self) -> str:
        final = self.mean_regret[-1]
        spread = self.std_regret[-1]
        return f"{self.agent_name}: regret {final:.4f} ± {spread:.4f} over {len(self.seeds)} seeds (T={self.horizon})"

    def to_dict(self) -> dict:
        out = {
            "agent_name": self.agent_name,
            "env_fingerprint": self.env_fingerprint,
            "agent_fingerprint": self.agent_fingerprint,
            "seeds": list(self.seeds),
            "horizon": self.horizon,
            "final_regrets": [float(v) for v in self.final_regrets],
            "mean_final_regret": float(self.mean_regret[-1]),
            "std_final_regret": float(self.std_regret[-1]),
            "wall_time_ms": self.wall_time_ms,
        }
        if self.decomposition is not None:
            out["regret_decomposition"] = [
                {"regret_I": float(r1), "regret_II": float(r2)} for r1, r2 in self.decomposition
            ]
        return out


def aggregate(runs: Sequence[RunResult]) -> AggregateResult:
    """Mean and n−1 std of regret curves, mean bonus curve."""
    if not runs:
        raise FingerprintMismatchError("nothing to aggregate")
    first = runs[0]
    for run in runs[1:]:
        if (run.env_fingerprint, run.agent_fingerprint) != (first.env_fingerprint, first.agent_fingerprint):
            raise FingerprintMismatchError(
                f"seed {run.seed} ran {run.agent_fingerprint}/{run.env_fingerprint}, "
                f"seed {first.seed} ran {first.agent_fingerprint}/{first.env_fingerprint}"
            )
        if run.horizon != first.horizon:
            raise FingerprintMismatchError(
                f"seed {run.seed} has {run.horizon} rounds, seed {first.seed} has {first.horizon}"
            )

    regrets = np.stack([r.cumulative_regret for r in runs])
    bonuses = np.stack([r.bonuses for r in runs])
    if len(runs) == 1:
        logger.warning("aggregating a single run of %s; std is reported as 0", first.agent_name)
        std = np.zeros(first.horizon)
    else:
        std = regrets.std(axis=0, ddof=1)

    return AggregateResult(
        agent_name=first.agent_name,
        env_fingerprint=first.env_fingerprint,
        agent_fingerprint=first.agent_fingerprint,
        seeds=[r.seed for r in runs],
        mean_regret=regrets.mean(axis=0),
        std_regret=std,
        mean_bonus=bonuses.mean(axis=0),
        final_regrets=[r.final_regret for r in runs],
        wall_time_ms=float(sum(r.wall_time_ms for r in runs)),
    )
