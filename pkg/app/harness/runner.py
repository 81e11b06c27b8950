"""Seeded experiment runs: observe, score, select, reward, learn."""

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from app.envs import EnvSpec, env_context, env_reward, make_env
from app.errors import NonFiniteError

from .agents import AgentSpec, create_agent

logger = logging.getLogger(__name__)

# Sub-stream labels; changing them changes every recorded trace.
SEED_LABELS = {"env": 101, "agent": 202, "trainer": 303, "offline": 404}


def derive_seed(seed: int, label: str) -> int:
    """Independent integer seed for one sub-stream of a run."""
    return int(np.random.SeedSequence([int(seed), SEED_LABELS[label]]).generate_state(1)[0])


def fingerprint(config: BaseModel) -> str:
    """Short hash of a config's canonical JSON form."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass
class RoundRecord:
    arm: int
    reward: float
    ucb: float
    bonus: float

    def to_dict(self) -> dict:
        return {"arm": self.arm, "reward": self.reward, "ucb": self.ucb, "bonus": self.bonus}


@dataclass
class RunResult:
    """One seed of one (environment, agent) pair."""
    env_fingerprint: str
    agent_fingerprint: str
    agent_name: str
    seed: int
    records: list[RoundRecord]
    cumulative_regret: np.ndarray
    contexts: np.ndarray
    arm_means: np.ndarray
    wall_time_ms: float = 0.0
    theta: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return int(self.cumulative_regret.shape[0])

    @property
    def arms(self) -> np.ndarray:
        return np.array([r.arm for r in self.records], dtype=np.int64)

    @property
    def bonuses(self) -> np.ndarray:
        return np.array([r.bonus for r in self.records])

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])

    def to_dict(self) -> dict:
        return {
            "env_fingerprint": self.env_fingerprint,
            "agent_fingerprint": self.agent_fingerprint,
            "agent_name": self.agent_name,
            "seed": self.seed,
            "horizon": self.horizon,
            "final_regret": self.final_regret,
            "wall_time_ms": self.wall_time_ms,
        }


def run_experiment(env_spec: EnvSpec, agent_spec: AgentSpec, horizon: int, seed: int) -> RunResult:
    """Run one agent for `horizon` rounds; regret is measured on true means."""
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")

    start = time.perf_counter()
    env = make_env(env_spec, derive_seed(seed, "env"))
    agent = create_agent(agent_spec, env.spec, derive_seed(seed, "agent"), derive_seed(seed, "trainer"))
    k = env.spec.arm_count

    records: list[RoundRecord] = []
    regret = np.zeros(horizon)
    contexts = np.zeros((horizon, env.spec.context_dim))
    arm_means = np.zeros((horizon, k))
    total = 0.0

    for t in range(horizon):
        x = env_context(env)
        means = env.means_at(x)
        try:
            decision = agent.decide(x)
            reward = env_reward(env, x, decision.arm)
            agent.observe(x, decision.arm, reward)
        except NonFiniteError as e:
            raise NonFiniteError(str(e), round_index=t) from e

        total += float(means.max() - means[decision.arm])
        regret[t] = total
        contexts[t] = x
        arm_means[t] = means
        records.append(RoundRecord(decision.arm, reward, decision.ucb, decision.bonus))
        env.advance()

    wall_time_ms = (time.perf_counter() - start) * 1000.0
    logger.info(
        "%s seed %d: regret %.4f after %d rounds (%.0f ms)",
        agent_spec.name, seed, total, horizon, wall_time_ms,
    )
    return RunResult(
        env_fingerprint=fingerprint(env_spec),
        agent_fingerprint=fingerprint(agent_spec),
        agent_name=agent_spec.name,
        seed=int(seed),
        records=records,
        cumulative_regret=regret,
        contexts=contexts,
        arm_means=arm_means,
        wall_time_ms=wall_time_ms,
        theta=agent.theta.copy(),
    )


def _run_one(args) -> RunResult:
    return run_experiment(*args)


def run_seeds(
    env_spec: EnvSpec,
    agent_spec: AgentSpec,
    horizon: int,
    seeds: Sequence[int],
    max_workers: int = 1,
    show_progress: bool = False,
) -> list[RunResult]:
    """Independent runs for every seed, returned in seed order."""
    tasks = [(env_spec, agent_spec, horizon, int(s)) for s in seeds]
    desc = f"{agent_spec.name}"
    if max_workers <= 1 or len(tasks) <= 1:
        return [_run_one(task) for task in tqdm(tasks, desc=desc, disable=not show_progress)]

    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(tqdm(pool.map(_run_one, tasks), total=len(tasks), desc=desc, disable=not show_progress))
