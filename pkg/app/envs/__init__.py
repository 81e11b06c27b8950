"""Bandit environments: simulators and CSV-backed classification bandits."""

from .bandits import (
    EnvState,
    env_context,
    env_mean,
    env_reward,
    make_env,
    make_mlp_sim,
    mlp_sim_spec,
)
from .dataset import CsvBanditLoader, load_dataset_bandit
from .spec import DatasetSchema, EnvSpec

__all__ = [
    "CsvBanditLoader",
    "DatasetSchema",
    "EnvSpec",
    "EnvState",
    "env_context",
    "env_mean",
    "env_reward",
    "load_dataset_bandit",
    "make_env",
    "make_mlp_sim",
    "mlp_sim_spec",
]
