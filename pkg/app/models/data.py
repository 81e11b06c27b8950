"""Logged interactions: single transitions and the growable dataset D_t."""

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from app.errors import DimensionMismatchError


@dataclass(frozen=True)
class Transition:
    """One logged interaction (x_t, a_t, r_t)."""
    context: np.ndarray
    arm: int
    reward: float

    def to_dict(self) -> dict:
        return {
            "context": [float(v) for v in self.context],
            "arm": int(self.arm),
            "reward": float(self.reward),
        }


class Dataset:
    """Ordered list of transitions stored as column arrays."""

    def __init__(self, context_dim: int, capacity: int = 64):
        self.context_dim = context_dim
        self._contexts = np.zeros((max(capacity, 1), context_dim))
        self._arms = np.zeros(max(capacity, 1), dtype=np.int64)
        self._rewards = np.zeros(max(capacity, 1))
        self._size = 0

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition], context_dim: Optional[int] = None) -> "Dataset":
        if context_dim is None:
            if not transitions:
                raise DimensionMismatchError("context_dim is required for an empty dataset")
            context_dim = len(transitions[0].context)
        data = cls(context_dim, capacity=len(transitions))
        for t in transitions:
            data.append(t)
        return data

    def append(self, transition: Transition) -> None:
        context = np.asarray(transition.context, dtype=np.float64).ravel()
        if context.shape[0] != self.context_dim:
            raise DimensionMismatchError(
                f"context has length {context.shape[0]}, dataset expects {self.context_dim}"
            )
        if self._size == self._arms.shape[0]:
            self._grow()
        self._contexts[self._size] = context
        self._arms[self._size] = int(transition.arm)
        self._rewards[self._size] = float(transition.reward)
        self._size += 1

    def _grow(self) -> None:
        capacity = 2 * self._arms.shape[0]
        contexts = np.zeros((capacity, self.context_dim))
        contexts[: self._size] = self._contexts[: self._size]
        arms = np.zeros(capacity, dtype=np.int64)
        arms[: self._size] = self._arms[: self._size]
        rewards = np.zeros(capacity)
        rewards[: self._size] = self._rewards[: self._size]
        self._contexts, self._arms, self._rewards = contexts, arms, rewards

    @property
    def contexts(self) -> np.ndarray:
        return self._contexts[: self._size]

    @property
    def arms(self) -> np.ndarray:
        return self._arms[: self._size]

    @property
    def rewards(self) -> np.ndarray:
        return self._rewards[: self._size]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        out = Dataset(self.context_dim, capacity=len(indices))
        out._contexts[: len(indices)] = self.contexts[indices]
        out._arms[: len(indices)] = self.arms[indices]
        out._rewards[: len(indices)] = self.rewards[indices]
        out._size = len(indices)
        return out

    def __len__(self) -> int:
        return self._size

    def __getitem__(self, i: int) -> Transition:
        if not -self._size <= i < self._size:
            raise IndexError(i)
        i %= self._size
        return Transition(self._contexts[i].copy(), int(self._arms[i]), float(self._rewards[i]))

    def __iter__(self) -> Iterator[Transition]:
        for i in range(self._size):
            yield self[i]


DataLike = Union[Dataset, Sequence[Transition]]


def as_dataset(data: DataLike, context_dim: int) -> Dataset:
    if isinstance(data, Dataset):
        if data.context_dim != context_dim:
            raise DimensionMismatchError(
                f"dataset has context_dim {data.context_dim}, model expects {context_dim}"
            )
        return data
    return Dataset.from_transitions(list(data), context_dim=context_dim)
