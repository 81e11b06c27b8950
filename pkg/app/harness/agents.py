"""Agent configuration and construction."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.baselines import BaselineConfig, GreedyAgent, NeuralUcbAgent
from app.envs import EnvSpec
from app.errors import ConfigError
from app.models import ModelSpec, TrainConfig
from app.rofu import BanditAgent, RofuAgent, RofuConfig
from app.rofu.agent import DEFAULT_GAMMA

AgentKind = Literal["rofu", "epsilon_greedy", "greedy", "neural_ucb_full", "neural_ucb_diag"]


class AgentSpec(BaseModel):
    """One agent of an experiment.

    `model` may be omitted; the agent then gets the default model for the
    environment family, with `hidden_widths` and `activation` applied to
    mlp models.
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    kind: AgentKind = "rofu"
    rofu_path: Literal["ascent", "linucb", "ucb1", "ntk"] = "ascent"
    model: Optional[ModelSpec] = None
    hidden_widths: tuple[int, ...] = (32, 32)
    activation: Literal["relu", "tanh"] = "relu"
    train: TrainConfig = TrainConfig()
    rofu: RofuConfig = RofuConfig()
    epsilon: float = Field(default=0.05, ge=0, le=1)
    gamma: float = Field(default=DEFAULT_GAMMA, gt=0)
    lam: float = Field(default=1.0, gt=0)
    ntk_design: Literal["running", "recompute_at_current"] = "running"


def default_model(agent_spec: AgentSpec, env_spec: EnvSpec) -> ModelSpec:
    """Model an agent uses on an environment when none is configured."""
    d, k = env_spec.context_dim, env_spec.arm_count
    if env_spec.kind in ("mab", "linear"):
        return ModelSpec(kind="linear", context_dim=d, arm_count=k)
    if env_spec.kind == "kernel":
        return env_spec.generator_model
    return ModelSpec(
        kind="mlp",
        context_dim=d,
        arm_count=k,
        layer_widths=(d + k, *agent_spec.hidden_widths, 1),
        activation=agent_spec.activation,
        arm_encoding="onehot_input",
    )


def agent_model(agent_spec: AgentSpec, env_spec: EnvSpec) -> ModelSpec:
    model = agent_spec.model or default_model(agent_spec, env_spec)
    if (model.context_dim, model.arm_count) != (env_spec.context_dim, env_spec.arm_count):
        raise ConfigError(
            f"agent '{agent_spec.name}' model has context_dim {model.context_dim}, "
            f"{model.arm_count} arms; environment has {env_spec.context_dim}, {env_spec.arm_count}"
        )
    return model


def baseline_config(agent_spec: AgentSpec) -> BaselineConfig:
    return BaselineConfig(
        kind=agent_spec.kind,
        epsilon=agent_spec.epsilon,
        gamma=agent_spec.gamma,
        lam=agent_spec.lam,
        train=agent_spec.train,
    )


def create_agent(agent_spec: AgentSpec, env_spec: EnvSpec, seed: int, train_seed: int) -> BanditAgent:
    """Factory for every agent kind."""
    model = agent_model(agent_spec, env_spec)

    if agent_spec.kind == "rofu":
        return RofuAgent(
            model,
            agent_spec.rofu,
            agent_spec.train,
            path=agent_spec.rofu_path,
            seed=seed,
            train_seed=train_seed,
            lam=agent_spec.lam,
            gamma=agent_spec.gamma,
            ntk_design=agent_spec.ntk_design,
        )

    cfg = baseline_config(agent_spec)
    if cfg.kind in ("epsilon_greedy", "greedy"):
        epsilon = cfg.epsilon if cfg.kind == "epsilon_greedy" else 0.0
        return GreedyAgent(model, cfg.train, epsilon=epsilon, seed=seed, train_seed=train_seed)

    if model.kind != "mlp":
        raise ConfigError(f"agent '{agent_spec.name}': NeuralUCB needs an mlp model")
    variant = "full" if cfg.kind == "neural_ucb_full" else "diag"
    return NeuralUcbAgent(
        model, cfg.train, variant=variant, gamma=cfg.gamma, lam=cfg.lam, seed=seed, train_seed=train_seed
    )
