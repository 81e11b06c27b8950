"""Experiment orchestration: runs, regret accounting, aggregation and persistence."""

from .agents import AgentSpec, agent_model, create_agent, default_model
from .persist import curves_frame, git_describe, persist
from .regret import (
    OFFLINE_STEPS,
    AggregateResult,
    aggregate,
    fit_offline_model,
    regret_decomposition,
    virtual_dataset,
)
from .runner import RoundRecord, RunResult, derive_seed, fingerprint, run_experiment, run_seeds

__all__ = [
    "OFFLINE_STEPS",
    "AgentSpec",
    "AggregateResult",
    "RoundRecord",
    "RunResult",
    "agent_model",
    "aggregate",
    "create_agent",
    "curves_frame",
    "default_model",
    "derive_seed",
    "fingerprint",
    "fit_offline_model",
    "git_describe",
    "persist",
    "regret_decomposition",
    "run_experiment",
    "run_seeds",
    "virtual_dataset",
]
