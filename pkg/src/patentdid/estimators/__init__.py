"""Estimation layer: design matrices, OLS, probit, Heckman, DiD harnesses."""
from .design import INTERCEPT, DesignMatrix, build_design
from .did import (
    PlaceboResult,
    did_dosage,
    did_heckman,
    did_ols,
    main_specifications,
    naive_difference,
    placebo,
    predict_conditional_stay,
    split_by_experience,
)
from .heckman import MILLS, HeckmanResult, heckman_two_step
from .linear import FitResult, ols
from .probit import inverse_mills, probit
from .report import render_table, results_records, stars

__all__ = [
    "INTERCEPT",
    "MILLS",
    "DesignMatrix",
    "FitResult",
    "HeckmanResult",
    "PlaceboResult",
    "build_design",
    "did_dosage",
    "did_heckman",
    "did_ols",
    "heckman_two_step",
    "inverse_mills",
    "main_specifications",
    "naive_difference",
    "ols",
    "placebo",
    "predict_conditional_stay",
    "probit",
    "render_table",
    "results_records",
    "split_by_experience",
    "stars",
]
