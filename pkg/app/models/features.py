"""Feature maps φ(x, a) for linear and kernel (random Fourier) models."""

from functools import lru_cache

import numpy as np

from .spec import ModelSpec


def arm_onehot(arms: np.ndarray, arm_count: int) -> np.ndarray:
    out = np.zeros((arms.shape[0], arm_count))
    out[np.arange(arms.shape[0]), arms] = 1.0
    return out


@lru_cache(maxsize=32)
def _rff_weights(input_dim: int, output_dim: int, bandwidth: float, seed: int):
    """Spectral samples for an RBF kernel of the given bandwidth."""
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 1.0 / bandwidth, size=(output_dim, input_dim))
    b = rng.uniform(0.0, 2.0 * np.pi, size=output_dim)
    W.setflags(write=False)
    b.setflags(write=False)
    return W, b


def feature_matrix(spec: ModelSpec, contexts: np.ndarray, arms: np.ndarray) -> np.ndarray:
    """Rows φ(x_i, a_i) for a batch, shape (n, feature_dim)."""
    n, d = contexts.shape
    k = spec.arm_count
    fmap = spec.feature_map

    if fmap.kind == "disjoint_onehot":
        out = np.zeros((n, k, d))
        out[np.arange(n), arms] = contexts
        return out.reshape(n, k * d)

    joint = np.hstack([contexts, arm_onehot(arms, k)])
    if fmap.kind == "shared":
        return joint

    W, b = _rff_weights(d + k, int(fmap.output_dim), float(fmap.bandwidth), int(fmap.seed))
    return np.sqrt(2.0 / W.shape[0]) * np.cos(joint @ W.T + b)


def feature_map(spec: ModelSpec, context: np.ndarray, arm: int) -> np.ndarray:
    """φ(x, a) for a single pair."""
    return feature_matrix(spec, np.asarray(context, dtype=np.float64)[None, :], np.array([arm]))[0]
