"""Least squares on a DesignMatrix with a normal-model likelihood."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import norm

from ..errors import EstimationError
from .design import DesignMatrix


@dataclass
class FitResult:
    method: str
    columns: list[str]
    params: np.ndarray
    se: np.ndarray
    tstats: np.ndarray
    pvalues: np.ndarray
    nobs: int
    nparams: int  # parameters counted by the AIC penalty
    loglik: float
    aic: float
    r2: float | None
    cov_params: np.ndarray
    design: DesignMatrix = field(repr=False, default=None)
    sigma2: float | None = None

    def coef(self, name: str) -> float:
        return float(self.params[self.columns.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.columns.index(name)])

    def pvalue_of(self, name: str) -> float:
        return float(self.pvalues[self.columns.index(name)])


def _wald_stats(params, cov):
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(se > 0, params / se, np.inf * np.sign(params))
    pvalues = 2.0 * norm.sf(np.abs(tstats))
    return se, tstats, pvalues


def ols(design: DesignMatrix, y) -> FitResult:
    """OLS via QR with conventional covariance and a Gaussian likelihood.

    AIC counts the error variance as an estimated parameter, so
    nparams = k + 1 and AIC = 2 * nparams - 2 * loglik.
    """
    y = np.asarray(y, dtype=float)
    X = design.matrix
    n, k = X.shape
    if y.shape != (n,):
        raise EstimationError(f"y has shape {y.shape}, expected ({n},)")
    if not np.all(np.isfinite(y)):
        raise EstimationError("y has missing values; censor the sample first")
    if n <= k:
        raise EstimationError(f"{n} observations cannot identify {k} parameters")
    q, r = np.linalg.qr(X)
    params = solve_triangular(r, q.T @ y)
    residuals = y - X @ params
    ssr = float(residuals @ residuals)
    sigma2 = ssr / (n - k)
    rinv = solve_triangular(r, np.eye(k))
    cov = sigma2 * (rinv @ rinv.T)
    se, tstats, pvalues = _wald_stats(params, cov)
    centered = y - y.mean()
    sst = float(centered @ centered)
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    # Gaussian log-likelihood at the MLE variance ssr / n.
    loglik = -0.5 * n * (np.log(2.0 * np.pi) + np.log(max(ssr, 1e-300) / n) + 1.0)
    nparams = k + 1
    return FitResult(
        method="ols",
        columns=list(design.columns),
        params=params,
        se=se,
        tstats=tstats,
        pvalues=pvalues,
        nobs=n,
        nparams=nparams,
        loglik=float(loglik),
        aic=float(2.0 * nparams - 2.0 * loglik),
        r2=float(r2),
        cov_params=cov,
        design=design,
        sigma2=float(sigma2),
    )
