"""Comparison agents: greedy, ε-greedy and NeuralUCB."""

from .greedy import GreedyAgent, epsilon_greedy_select
from .neural_ucb import BaselineConfig, DiagonalDesign, NeuralUcbAgent, neural_ucb_estimate, neural_ucb_value

__all__ = [
    "BaselineConfig",
    "DiagonalDesign",
    "GreedyAgent",
    "NeuralUcbAgent",
    "epsilon_greedy_select",
    "neural_ucb_estimate",
    "neural_ucb_value",
]
