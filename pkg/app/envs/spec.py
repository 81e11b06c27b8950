"""Environment specifications."""

import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models import ModelSpec


class DatasetSchema(BaseModel):
    """Where a classification CSV lives and which column holds the label."""
    model_config = ConfigDict(frozen=True)

    path: Path
    label_column: str = "label"
    class_count: Optional[int] = Field(default=None, ge=2)


class EnvSpec(BaseModel):
    """A bandit problem.

    mab      fixed per-arm means, context [1.0]
    linear   f = φ(x, a)ᵀθ* with disjoint one-hot features
    kernel   f = φ(x, a)ᵀθ* with random Fourier features
    mlp_sim  f = generator network with random θ*
    dataset  reward 1 when the arm equals the row's class label
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["mab", "linear", "kernel", "mlp_sim", "dataset"]
    arm_count: int = Field(default=2, ge=2)
    context_dim: int = Field(default=1, ge=1)
    noise_std: float = Field(default=0.0, ge=0)
    context_law: Literal["gaussian", "uniform", "dataset_order"] = "gaussian"
    means: Optional[tuple[float, ...]] = None
    theta_star: Optional[tuple[float, ...]] = None
    rff_dim: int = Field(default=200, ge=1)
    bandwidth: float = Field(default=1.0, gt=0)
    hidden_width: int = Field(default=32, ge=1)
    deep: bool = False
    dataset: Optional[DatasetSchema] = None

    @model_validator(mode="after")
    def _check_payload(self) -> "EnvSpec":
        if not math.isfinite(self.noise_std):
            raise ValueError("noise_std must be finite")
        if self.kind == "mab":
            if self.means is None or len(self.means) != self.arm_count:
                raise ValueError(f"mab needs {self.arm_count} means, got {self.means}")
            if self.context_dim != 1:
                raise ValueError("mab environments have context_dim 1")
        if self.kind == "dataset":
            if self.dataset is None:
                raise ValueError("dataset environments need a dataset section")
            if self.context_law != "dataset_order":
                raise ValueError("dataset environments use context_law dataset_order")
        elif self.context_law == "dataset_order":
            raise ValueError(f"{self.kind} environments draw gaussian or uniform contexts")
        if self.theta_star is not None and self.kind not in ("linear", "kernel"):
            raise ValueError("theta_star is only used by linear and kernel environments")
        return self

    @property
    def generator_model(self) -> Optional[ModelSpec]:
        """Model whose forward pass gives the true means (None for mab and dataset)."""
        if self.kind == "linear":
            return ModelSpec(kind="linear", context_dim=self.context_dim, arm_count=self.arm_count)
        if self.kind == "kernel":
            return ModelSpec(
                kind="kernel_features",
                context_dim=self.context_dim,
                arm_count=self.arm_count,
                feature_map={
                    "kind": "random_fourier",
                    "output_dim": self.rff_dim,
                    "bandwidth": self.bandwidth,
                    "seed": 0,
                },
            )
        if self.kind == "mlp_sim":
            hidden = (self.hidden_width,) * (3 if self.deep else 1)
            return ModelSpec(
                kind="mlp",
                context_dim=self.context_dim,
                arm_count=self.arm_count,
                layer_widths=(self.context_dim, *hidden, self.arm_count),
                activation="relu",
                arm_encoding="output_head",
            )
        return None
