"""Optimistic estimates: configuration, bonus mapping g and arm selection."""

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.errors import NonFiniteError
from app.models import RegSpec

# Full-batch ascent gradients up to this many transitions, minibatches above.
FULL_BATCH_LIMIT = 1024
MINIBATCH_SIZE = 256


class RofuConfig(BaseModel):
    """Knobs of the optimistic objective f_θ(x, a) − η·ℛ(θ; D) and its ascent.

    `step_scaling="per_sample"` divides κ by max(1, |D|) so the ascent stays
    stable as ℛ's curvature grows with the data. `center_at_prev` ascends on
    the Bregman divergence of ℛ from θ_{t−1} instead of ℛ itself, which drops
    the pull of any gradient left over from (stochastic) training.
    """
    model_config = ConfigDict(frozen=True)

    eta: float = Field(default=1.0, gt=0)
    g_exponent: float = Field(default=0.5, gt=0, le=1)
    ascent_steps: int = Field(default=10, ge=0)
    ascent_step_size: float = Field(default=1e-3, gt=0)
    ascent_batch: Union[int, Literal["full", "auto"]] = "auto"
    step_scaling: Literal["constant", "per_sample"] = "constant"
    center_at_prev: bool = False
    reg: RegSpec = RegSpec()
    clamp_bonus_at_zero: Literal[True] = True

    def batch_size_for(self, n: int) -> Union[int, None]:
        """Minibatch size for a dataset of n transitions (None = full batch)."""
        if self.ascent_batch == "full":
            return None
        if self.ascent_batch == "auto":
            return None if n <= FULL_BATCH_LIMIT else MINIBATCH_SIZE
        return None if self.ascent_batch >= n else int(self.ascent_batch)

    def step_size_for(self, n: int) -> float:
        if self.step_scaling == "per_sample":
            return self.ascent_step_size / max(1, n)
        return self.ascent_step_size


@dataclass
class OfuEstimate:
    """Optimistic value of one arm; ucb = base_value + bonus."""
    base_value: float
    optimistic_value: float
    bonus: float
    ucb: float
    ascent_trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "optimistic_value": self.optimistic_value,
            "bonus": self.bonus,
            "ucb": self.ucb,
        }


def combine_bonus(base: float, optimistic: float, b: float = 0.5) -> OfuEstimate:
    """bonus = max(0, optimistic − base)^b, ucb = base + bonus."""
    if not 0 < b <= 1:
        raise ValueError(f"g exponent must lie in (0, 1], got {b}")
    gain = max(0.0, float(optimistic) - float(base))
    bonus = math.sqrt(gain) if b == 0.5 else gain ** b
    return OfuEstimate(
        base_value=float(base),
        optimistic_value=float(optimistic),
        bonus=bonus,
        ucb=float(base) + bonus,
    )


def select_action(ucbs: Sequence[float]) -> int:
    """Index of the largest ucb; ties go to the lowest index."""
    values = np.asarray(ucbs, dtype=np.float64)
    if values.size == 0:
        raise ValueError("select_action needs at least one arm")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"non-finite ucb among {values.tolist()}")
    return int(np.argmax(values))
