"""Reward models f_θ(x, a): specs, forward/gradient, losses and training."""

from .checkpoint import load_params, save_params
from .data import DataLike, Dataset, Transition, as_dataset
from .features import feature_map, feature_matrix
from .loss import RegSpec, mse, regularizer_value_and_grad, sse_value_and_grad
from .network import (
    arm_values,
    evaluate,
    forward,
    forward_batch,
    grad_params,
    jacobian,
    pullback,
    value_and_grad,
)
from .spec import FeatureMapSpec, ModelSpec, ParamVector, init_params, layer_offsets
from .training import TrainConfig, design_and_target, ridge_fit, train, training_loss

__all__ = [
    "DataLike",
    "Dataset",
    "FeatureMapSpec",
    "ModelSpec",
    "ParamVector",
    "RegSpec",
    "TrainConfig",
    "Transition",
    "arm_values",
    "as_dataset",
    "design_and_target",
    "evaluate",
    "feature_map",
    "feature_matrix",
    "forward",
    "forward_batch",
    "grad_params",
    "init_params",
    "jacobian",
    "layer_offsets",
    "load_params",
    "mse",
    "pullback",
    "regularizer_value_and_grad",
    "ridge_fit",
    "save_params",
    "sse_value_and_grad",
    "train",
    "training_loss",
    "value_and_grad",
]
