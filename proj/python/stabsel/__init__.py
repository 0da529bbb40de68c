"""Sparse structured variable selection.

Solvers (lasso, group lasso, structured input-output lasso), stability
selection with the expected-NFP bound, screen-and-clean, and
cross-validation. All indices on the Python side are 0-based.
"""

from ._stabsel import (
    DataError,
    bh_adjust,
    cross_validate,
    fit,
    lambda_max,
    make_dataset,
    nfp_bound,
    pi_for_bound,
    screen_and_clean,
    stability_select,
    student_t_p,
)

__all__ = [
    "DataError",
    "bh_adjust",
    "cross_validate",
    "fit",
    "lambda_max",
    "make_dataset",
    "nfp_bound",
    "pi_for_bound",
    "screen_and_clean",
    "stability_select",
    "student_t_p",
]

__version__ = "0.1.0"
