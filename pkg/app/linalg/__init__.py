"""Dense linear algebra for UCB design matrices."""

from .psd import (
    PsdInverseState,
    create_design,
    design_from_matrix,
    psd_solve,
    quad_form,
    rank1_inverse_update,
    refactorize,
    REFACTOR_INTERVAL,
)

__all__ = [
    "PsdInverseState",
    "create_design",
    "design_from_matrix",
    "psd_solve",
    "quad_form",
    "rank1_inverse_update",
    "refactorize",
    "REFACTOR_INTERVAL",
]
