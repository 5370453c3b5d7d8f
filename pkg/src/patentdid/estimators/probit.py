"""Probit MLE by Newton iterations with analytic gradient and Hessian.

The log-likelihood, score, and Hessian use the signed-index identities
(q = 2y - 1), with all normal-CDF terms evaluated in log space so the
fit stays finite far into the tails. Step halving guards the ascent and
a small ridge rescues near-singular Hessians; perfect separation is
detected and refused rather than silently returning runaway
coefficients.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import log_ndtr, ndtr

from ..errors import EstimationError
from .design import DesignMatrix
from .linear import FitResult, _wald_stats

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

GRADIENT_TOL = 1e-8
MAX_ITER = 100
RIDGE = 1e-8
SEPARATION_COEF = 25.0
SEPARATION_PROB = 1e-12


def inverse_mills(z):
    """phi(z) / Phi(z), computed as exp(log phi - log Phi).

    log_ndtr is accurate far into the left tail, so the ratio stays
    finite and close to -z for very negative arguments instead of
    overflowing to 0/0.
    """
    z = np.asarray(z, dtype=float)
    log_pdf = -0.5 * z * z - _LOG_SQRT_2PI
    out = np.exp(log_pdf - log_ndtr(z))
    return float(out) if out.ndim == 0 else out


def _loglik(q, Xb):
    return float(np.sum(log_ndtr(q * Xb)))


def _score_weights(q, Xb):
    # g_i = q_i * phi(x_i b) / Phi(q_i x_i b); the Hessian weight is
    # g_i * (g_i + x_i b), positive for both outcomes.
    g = q * inverse_mills(q * Xb)
    w = g * (g + Xb)
    return g, w


def probit(design: DesignMatrix, y) -> FitResult:
    """Fit P(y=1|x) = Phi(x'b); converges when max|gradient| < 1e-8."""
    y = np.asarray(y, dtype=float)
    X = design.matrix
    n, k = X.shape
    if y.shape != (n,):
        raise EstimationError(f"y has shape {y.shape}, expected ({n},)")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise EstimationError("probit outcome must be coded 0/1")
    if y.min() == y.max():
        raise EstimationError("probit outcome is single-class; nothing to fit")
    if n <= k:
        raise EstimationError(f"{n} observations cannot identify {k} parameters")

    q = 2.0 * y - 1.0
    beta = np.zeros(k)
    Xb = X @ beta
    ll = _loglik(q, Xb)
    converged = False
    for _ in range(MAX_ITER):
        g, w = _score_weights(q, Xb)
        gradient = X.T @ g
        if np.max(np.abs(gradient)) < GRADIENT_TOL:
            converged = True
            break
        neg_hessian = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(neg_hessian, gradient)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            warnings.warn("probit Hessian near-singular; adding ridge")
            scale = RIDGE * max(1.0, float(np.trace(neg_hessian)) / k)
            step = np.linalg.solve(neg_hessian + scale * np.eye(k), gradient)
        # Step halving: retreat until the objective improves.
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            cand_Xb = X @ candidate
            cand_ll = _loglik(q, cand_Xb)
            if cand_ll >= ll:
                break
            scale *= 0.5
        else:
            break  # no ascent direction left; gradient check decides
        beta, Xb, ll = candidate, cand_Xb, cand_ll
        _check_separation(beta, y, Xb)
    else:
        g, _ = _score_weights(q, Xb)
        gradient = X.T @ g
        converged = np.max(np.abs(gradient)) < GRADIENT_TOL
    if not converged:
        warnings.warn("probit reached the iteration cap before the gradient tolerance")
    _check_separation(beta, y, Xb)

    _, w = _score_weights(q, Xb)
    neg_hessian = (X * w[:, None]).T @ X
    try:
        cov = np.linalg.inv(neg_hessian)
    except np.linalg.LinAlgError:
        warnings.warn("probit Hessian near-singular; adding ridge")
        scale = RIDGE * max(1.0, float(np.trace(neg_hessian)) / k)
        cov = np.linalg.inv(neg_hessian + scale * np.eye(k))
    se, tstats, pvalues = _wald_stats(beta, cov)
    return FitResult(
        method="probit",
        columns=list(design.columns),
        params=beta,
        se=se,
        tstats=tstats,
        pvalues=pvalues,
        nobs=n,
        nparams=k,
        loglik=ll,
        aic=float(2.0 * k - 2.0 * ll),
        r2=None,
        cov_params=cov,
        design=design,
    )


def _check_separation(beta, y, Xb) -> None:
    if np.max(np.abs(beta)) > SEPARATION_COEF:
        raise EstimationError(
            "probit detected perfect separation (coefficient magnitude "
            f"exceeded {SEPARATION_COEF})"
        )
    probs = ndtr(Xb)
    ones = probs[y == 1.0]
    zeros = probs[y == 0.0]
    if (ones.size and np.all(ones > 1.0 - SEPARATION_PROB)) or (
        zeros.size and np.all(zeros < SEPARATION_PROB)
    ):
        raise EstimationError(
            "probit detected perfect separation (a class is fitted at "
            "probability 0 or 1)"
        )
