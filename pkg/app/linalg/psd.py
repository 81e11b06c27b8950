"""Dense PSD solves and an incrementally maintained design-matrix inverse."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from app.errors import DegenerateUpdateError, DimensionMismatchError, NotPsdError

# Sherman-Morrison drift is washed out by refactorizing this often.
REFACTOR_INTERVAL = 512
PIVOT_FLOOR = 1e-12
SYMMETRY_TOL = 1e-9


@dataclass
class PsdInverseState:
    """Running Z together with Z^-1.

    `matrix` is the accumulated Z (kept so the inverse can be rebuilt from
    scratch), `inverse` the maintained Z^-1. `log_det` is diagnostic only.
    """
    dim: int
    inverse: np.ndarray
    matrix: np.ndarray
    log_det: float = 0.0
    updates: int = 0

    def copy(self) -> "PsdInverseState":
        return PsdInverseState(
            dim=self.dim,
            inverse=self.inverse.copy(),
            matrix=self.matrix.copy(),
            log_det=self.log_det,
            updates=self.updates,
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "log_det": self.log_det,
            "updates": self.updates,
        }


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPsdError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL * scale:
        raise NotPsdError("matrix is not symmetric")
    return a


def _cholesky(a: np.ndarray):
    try:
        factor = sla.cho_factor(a, lower=True, check_finite=False)
    except sla.LinAlgError as e:
        raise NotPsdError(f"Cholesky factorization failed: {e}") from e
    pivots = np.diag(factor[0]) ** 2
    if pivots.size and float(pivots.min()) < PIVOT_FLOOR:
        raise NotPsdError(f"pivot {float(pivots.min()):.3e} below {PIVOT_FLOOR}")
    return factor


def psd_solve(a, b) -> np.ndarray:
    """Solve a·x = b for symmetric positive-definite a via Cholesky."""
    a = _as_matrix(a)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatchError(
            f"right-hand side has {b.shape[0]} rows, matrix is {a.shape[0]}x{a.shape[0]}"
        )
    factor = _cholesky(a)
    return sla.cho_solve(factor, b, check_finite=False)


def _inverse_and_log_det(z: np.ndarray) -> tuple[np.ndarray, float]:
    factor = _cholesky(z)
    inverse = sla.cho_solve(factor, np.eye(z.shape[0]), check_finite=False)
    inverse = 0.5 * (inverse + inverse.T)
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return inverse, log_det


def create_design(dim: int, lam: float = 1.0) -> PsdInverseState:
    """State for Z = lam·I."""
    if dim < 1:
        raise DimensionMismatchError(f"design dimension must be positive, got {dim}")
    if lam <= 0:
        raise NotPsdError(f"ridge weight must be positive, got {lam}")
    return PsdInverseState(
        dim=dim,
        inverse=np.eye(dim) / lam,
        matrix=np.eye(dim) * lam,
        log_det=dim * math.log(lam),
    )


def design_from_matrix(z) -> PsdInverseState:
    """State for an explicitly given Z (factorized once)."""
    z = _as_matrix(z)
    inverse, log_det = _inverse_and_log_det(z)
    return PsdInverseState(dim=z.shape[0], inverse=inverse, matrix=z.copy(), log_det=log_det)


def refactorize(state: PsdInverseState) -> PsdInverseState:
    inverse, log_det = _inverse_and_log_det(state.matrix)
    state.inverse = inverse
    state.log_det = log_det
    return state


def rank1_inverse_update(state: PsdInverseState, u, inplace: bool = False) -> PsdInverseState:
    """Return the state for Z + u·uᵀ using Sherman-Morrison.

    With `inplace=True` the given state is mutated (single-writer use in agents).
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    if u.shape[0] != state.dim:
        raise DimensionMismatchError(f"update vector has length {u.shape[0]}, design is {state.dim}")
    if not np.any(u):
        return state

    zu = state.inverse @ u
    denom = 1.0 + float(u @ zu)
    if not denom > PIVOT_FLOOR:
        raise DegenerateUpdateError(f"1 + uᵀZ⁻¹u = {denom:.3e} is not positive")

    new = state if inplace else state.copy()
    new.inverse -= np.outer(zu, zu) / denom
    new.matrix += np.outer(u, u)
    new.log_det += math.log(denom)
    new.updates += 1
    if new.updates % REFACTOR_INTERVAL == 0:
        refactorize(new)
    return new


def quad_form(state: PsdInverseState, v) -> float:
    """vᵀ·Z⁻¹·v, clamped at zero."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape[0] != state.dim:
        raise DimensionMismatchError(f"vector has length {v.shape[0]}, design is {state.dim}")
    return max(0.0, float(v @ state.inverse @ v))
