"""Regularized optimism: optimistic estimates, closed forms and the ROFU agent."""

from .agent import BanditAgent, Decision, RofuAgent, rofu_round, round_seed
from .ascent import ascent_objective, rofu_ucb_ascent
from .bonus import OfuEstimate, RofuConfig, combine_bonus, select_action
from .closed_form import (
    ArmStats,
    NtkState,
    create_ntk_state,
    linearized_ascent,
    ntk_design_update,
    ntk_optimistic_params,
    rofu_ucb_linucb,
    rofu_ucb_ntk_linearized,
    ucb1_eta,
    ucb1_value,
)

__all__ = [
    "ArmStats",
    "BanditAgent",
    "Decision",
    "NtkState",
    "OfuEstimate",
    "RofuAgent",
    "RofuConfig",
    "ascent_objective",
    "combine_bonus",
    "create_ntk_state",
    "linearized_ascent",
    "ntk_design_update",
    "ntk_optimistic_params",
    "rofu_round",
    "rofu_ucb_ascent",
    "rofu_ucb_linucb",
    "rofu_ucb_ntk_linearized",
    "round_seed",
    "select_action",
    "ucb1_eta",
    "ucb1_value",
]
