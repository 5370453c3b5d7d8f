"""Regression tables and machine-readable result records."""
from __future__ import annotations

import warnings

import numpy as np
import pytest

from patentdid.estimators.did import did_heckman, did_ols
from patentdid.estimators.report import render_table, results_records, stars

from test_did import make_panel


def _models():
    frame = make_panel()
    idx = frame[(frame["acquired"] == 0) & (frame["period"] == 1)].index[:10]
    frame.loc[idx, "active"] = 0
    frame.loc[idx, "stay"] = np.nan
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {
            "ols": did_ols(frame),
            "ols_fe": did_ols(frame, deal_year_fe=True),
            "heckman": did_heckman(frame),
        }


def test_stars_strict_thresholds():
    assert stars(0.2) == ""
    assert stars(0.05) == ""
    assert stars(0.049) == "*"
    assert stars(0.01) == "*"
    assert stars(0.009) == "**"
    assert stars(0.001) == "**"
    assert stars(0.0009) == "***"


def test_render_table_layout():
    text = render_table(_models(), title="Demo table")
    lines = text.splitlines()
    assert lines[0] == "Demo table"
    assert "acquired_x_after" in text
    assert "mills" in text
    # Fixed-effect dummy columns collapse into a Yes/No row.
    fe_rows = [l for l in lines if l.startswith("deal_year FE")]
    assert len(fe_rows) == 1
    assert "Yes" in fe_rows[0] and "No" in fe_rows[0]
    assert not any("deal_year=" in l for l in lines)
    # Intercept prints last among coefficients, footer carries N.
    assert any(l.startswith("const") for l in lines)
    assert any(l.startswith("N ") for l in lines)
    assert any(l.startswith("log-likelihood") for l in lines)
    assert lines[-1] == (
        "standard errors in parentheses; * p<0.05 ** p<0.01 *** p<0.001"
    )


def test_render_table_coefficients_match_fits():
    models = _models()
    text = render_table(models)
    interaction = models["ols"].coef("acquired_x_after")
    assert f"{interaction:.4f}" in text
    se = models["ols"].se_of("acquired_x_after")
    assert f"({se:.4f})" in text


def test_results_records_structure():
    models = _models()
    records = results_records(models)
    keys = {"model", "method", "term", "coef", "se", "pvalue", "nobs"}
    assert all(set(r) == keys for r in records)
    ols_terms = [r["term"] for r in records if r["model"] == "ols"]
    assert "acquired_x_after" in ols_terms and "const" in ols_terms
    by_term = {r["term"]: r for r in records if r["model"] == "ols"}
    assert by_term["acquired_x_after"]["coef"] == pytest.approx(
        models["ols"].coef("acquired_x_after")
    )
    # Selection-model results append rho and sigma summary rows.
    heckman_rows = {r["term"]: r for r in records if r["model"] == "heckman"}
    assert "rho" in heckman_rows and "sigma" in heckman_rows
    assert heckman_rows["rho"]["method"] == "heckman_two_step"
    assert np.isnan(heckman_rows["rho"]["se"])
    assert "mills" in heckman_rows
