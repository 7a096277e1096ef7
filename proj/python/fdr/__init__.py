"""Free discontinuity regression on scattered data."""

from ._core import (
    SolverError,
    circle_sample,
    fig1_sample,
    fit,
    sure_search,
)

__all__ = ["SolverError", "circle_sample", "fig1_sample", "fit", "sure_search"]
