"""Model and feature-map specifications plus the flat parameter layout."""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# ParamVector: a flat float64 numpy array of length ModelSpec.param_count.
ParamVector = np.ndarray


class FeatureMapSpec(BaseModel):
    """How φ(x, a) is built for linear and kernel models."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["disjoint_onehot", "shared", "random_fourier"] = "disjoint_onehot"
    output_dim: Optional[int] = Field(default=None, ge=1)
    bandwidth: float = Field(default=1.0, gt=0)
    seed: int = 0


class ModelSpec(BaseModel):
    """Reward model f_θ(x, a).

    For mlp models `layer_widths` lists every layer width, input and output
    included. With `arm_encoding="onehot_input"` the network reads x ⊕ e_a and
    has a single output; with `"output_head"` it reads x and emits one output
    per arm.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["linear", "kernel_features", "mlp"]
    context_dim: int = Field(ge=1)
    arm_count: int = Field(ge=1)
    layer_widths: tuple[int, ...] = ()
    feature_map: FeatureMapSpec = FeatureMapSpec()
    activation: Literal["relu", "tanh"] = "relu"
    arm_encoding: Literal["onehot_input", "output_head"] = "onehot_input"

    @model_validator(mode="after")
    def _check_layout(self) -> "ModelSpec":
        if self.kind == "mlp":
            widths = self.layer_widths
            if len(widths) < 2 or any(w < 1 for w in widths):
                raise ValueError(f"mlp needs at least input and output widths, got {widths}")
            if self.arm_encoding == "onehot_input":
                expected = (self.context_dim + self.arm_count, 1)
            else:
                expected = (self.context_dim, self.arm_count)
            if (widths[0], widths[-1]) != expected:
                raise ValueError(
                    f"{self.arm_encoding} mlp needs input/output widths {expected}, "
                    f"got {(widths[0], widths[-1])}"
                )
            return self

        fmap = self.feature_map
        if self.kind == "kernel_features" and fmap.kind != "random_fourier":
            raise ValueError("kernel_features models need a random_fourier feature map")
        if fmap.kind == "random_fourier" and fmap.output_dim is None:
            raise ValueError("random_fourier feature maps need output_dim")
        natural = self._natural_feature_dim()
        if fmap.kind != "random_fourier" and fmap.output_dim not in (None, natural):
            raise ValueError(f"{fmap.kind} features have dimension {natural}, got {fmap.output_dim}")
        return self

    def _natural_feature_dim(self) -> int:
        kind = self.feature_map.kind
        if kind == "disjoint_onehot":
            return self.context_dim * self.arm_count
        if kind == "shared":
            return self.context_dim + self.arm_count
        return int(self.feature_map.output_dim)

    @property
    def feature_dim(self) -> int:
        return self._natural_feature_dim()

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """(out, in) per affine layer."""
        w = self.layer_widths
        return [(w[i + 1], w[i]) for i in range(len(w) - 1)]

    @property
    def param_count(self) -> int:
        if self.kind == "mlp":
            return sum(o * i + o for o, i in self.layer_shapes)
        return self.feature_dim

    @property
    def width(self) -> int:
        """Network width m (largest hidden layer); 1 for feature models."""
        hidden = self.layer_widths[1:-1] if self.kind == "mlp" else ()
        return max(hidden) if hidden else 1


def layer_offsets(spec: ModelSpec) -> list[tuple[int, int, int]]:
    """(weight_start, bias_start, end) for each layer in the flat vector.

    Layer ℓ stores W_ℓ row-major (out×in) followed by b_ℓ (out).
    """
    offsets = []
    pos = 0
    for out_dim, in_dim in spec.layer_shapes:
        w_end = pos + out_dim * in_dim
        offsets.append((pos, w_end, w_end + out_dim))
        pos = w_end + out_dim
    return offsets


def init_params(spec: ModelSpec, seed: int = 0) -> ParamVector:
    """θ₀: zeros for feature models, N(0, 1/fan_in) weights and zero biases for mlps."""
    if spec.kind != "mlp":
        return np.zeros(spec.param_count)
    rng = np.random.default_rng(seed)
    theta = np.zeros(spec.param_count)
    for (out_dim, in_dim), (w0, b0, _) in zip(spec.layer_shapes, layer_offsets(spec)):
        theta[w0:b0] = rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=out_dim * in_dim)
    return theta
