"""Heckman two-step selection correction built on the probit stage.

Stage 1 fits a probit for selection on every row; stage 2 regresses the
outcome on the outcome terms plus the inverse Mills ratio over selected
rows. sigma^2, rho, and the athrho/lnsigma transformations come from
the usual two-step moment formulas. Stage-2 standard errors are
conventional OLS by default (a known understatement because the Mills
term is estimated); the corrected covariance is available behind
`corrected_se=True`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .design import DesignMatrix, build_design
from .linear import FitResult, _wald_stats, ols
from .probit import inverse_mills, probit

MILLS = "mills"


@dataclass
class HeckmanResult:
    selection: FitResult | None
    outcome: FitResult
    mills_coef: float
    sigma: float
    rho: float
    athrho: float
    lnsigma: float
    nobs_total: int
    nobs_selected: int
    clamped: bool = False

    @property
    def loglik(self) -> float:
        """Working likelihood: stage-1 probit plus stage-2 normal model."""
        stage1 = self.selection.loglik if self.selection is not None else 0.0
        return stage1 + self.outcome.loglik

    @property
    def aic(self) -> float:
        stage1 = self.selection.nparams if self.selection is not None else 0
        k = stage1 + self.outcome.nparams
        return 2.0 * k - 2.0 * self.loglik

    def coef(self, name: str) -> float:
        return self.outcome.coef(name)


def heckman_two_step(
    frame,
    selection_terms,
    outcome_terms,
    *,
    selection_outcome: str = "active",
    outcome_outcome: str = "stay",
    exclusion=("age",),
    dummies=(),
    drop_reference: dict | None = None,
    prunable=(),
    corrected_se: bool = False,
) -> HeckmanResult:
    """Two-step estimates for a censored outcome with a selection equation.

    The exclusion variables must appear in the selection terms and must
    not appear in the outcome terms; identification off the normal
    functional form alone is refused.
    """
    selection_terms = list(selection_terms)
    outcome_terms = list(outcome_terms)
    for name in exclusion:
        if name not in selection_terms:
            raise ValidationError(
                f"exclusion variable {name!r} missing from the selection terms"
            )
        if name in outcome_terms:
            raise ValidationError(
                f"exclusion variable {name!r} may not appear in the outcome terms"
            )

    selected_mask = frame[selection_outcome].to_numpy(dtype=float) == 1.0
    n_total = len(frame)
    n_selected = int(selected_mask.sum())
    if n_selected == 0:
        raise ValidationError("no selected rows; the outcome is never observed")

    if n_selected == n_total:
        warnings.warn(
            "no censoring: every row is selected, stage 2 reduces to OLS "
            "and rho is undefined"
        )
        design = build_design(
            frame,
            outcome_terms,
            dummies,
            drop_reference=drop_reference,
            prunable=prunable,
        )
        outcome_fit = ols(design, frame[outcome_outcome].to_numpy(dtype=float))
        # e'e / n, the same moment the censored branch uses with no Mills term.
        df = outcome_fit.nobs - design.nparams
        sigma = float(np.sqrt(outcome_fit.sigma2 * df / outcome_fit.nobs))
        return HeckmanResult(
            selection=None,
            outcome=outcome_fit,
            mills_coef=float("nan"),
            sigma=sigma,
            rho=float("nan"),
            athrho=float("nan"),
            lnsigma=float(np.log(sigma)) if sigma > 0 else float("nan"),
            nobs_total=n_total,
            nobs_selected=n_selected,
        )

    selection_design = build_design(
        frame,
        selection_terms,
        dummies,
        drop_reference=drop_reference,
        prunable=prunable,
    )
    selection_fit = probit(
        selection_design, frame[selection_outcome].to_numpy(dtype=float)
    )
    index = selection_design.matrix @ selection_fit.params
    mills = inverse_mills(index[selected_mask])
    delta = mills * (mills + index[selected_mask])

    selected = frame.loc[selected_mask]
    outcome_design = build_design(
        selected,
        outcome_terms,
        dummies,
        drop_reference=drop_reference,
        prunable=prunable,
    )
    W = np.column_stack([outcome_design.matrix, mills])
    stage2 = DesignMatrix(
        matrix=W,
        columns=list(outcome_design.columns) + [MILLS],
        row_index=outcome_design.row_index,
        dropped_reference=outcome_design.dropped_reference,
        pruned=outcome_design.pruned,
    )
    y = selected[outcome_outcome].to_numpy(dtype=float)
    outcome_fit = ols(stage2, y)

    beta_mills = outcome_fit.coef(MILLS)
    residuals = y - W @ outcome_fit.params
    sigma2 = float(residuals @ residuals) / n_selected + beta_mills**2 * float(
        delta.mean()
    )
    sigma = float(np.sqrt(sigma2))
    rho = beta_mills / sigma
    clamped = abs(rho) > 1.0
    if clamped:
        warnings.warn(
            f"two-step moment estimate rho = {rho:.6f} outside [-1, 1]; clamped"
        )
        rho = float(np.clip(rho, -1.0, 1.0))
    athrho = float(np.arctanh(np.clip(rho, -1.0 + 1e-15, 1.0 - 1e-15)))

    if corrected_se:
        Z = selection_design.matrix[selected_mask]
        R = 1.0 - rho**2 * delta
        WtW_inv = np.linalg.inv(W.T @ W)
        WdZ = (W * delta[:, None]).T @ Z
        Q = rho**2 * (WdZ @ selection_fit.cov_params @ WdZ.T)
        middle = (W * R[:, None]).T @ W + Q
        cov = sigma2 * (WtW_inv @ middle @ WtW_inv)
        outcome_fit.cov_params = cov
        outcome_fit.se, outcome_fit.tstats, outcome_fit.pvalues = _wald_stats(
            outcome_fit.params, cov
        )

    return HeckmanResult(
        selection=selection_fit,
        outcome=outcome_fit,
        mills_coef=beta_mills,
        sigma=sigma,
        rho=rho,
        athrho=athrho,
        lnsigma=float(np.log(sigma)),
        nobs_total=n_total,
        nobs_selected=n_selected,
        clamped=clamped,
    )
