"""Difference-in-differences harnesses over the matched inventor panel.

All entry points take the panel as a DataFrame (see panel.panel_frame)
with two rows per inventor and stay missing exactly when active = 0.
The stay regressions run on active rows only; the Heckman variants keep
age in the selection equation as the exclusion restriction and drop it
from the outcome equation.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .design import build_design
from .heckman import HeckmanResult, heckman_two_step
from .linear import FitResult, ols
from .probit import inverse_mills

ACQUIRED = "acquired"
AFTER = "after"
INTERACTION = "acquired_x_after"
DEFAULT_COVARIATES = ("exclusivity", "lpatents", "age")
EXCLUSION = ("age",)
DOSAGE_LEVELS = ("low", "medium", "high")
PLACEBO_SCHEMES = ("all", "within_treated", "within_control")
EXPERIENCE_CUTOFF = 6


def _prepare(frame):
    """Validate censoring coherence and add the interaction columns."""
    active = frame["active"].to_numpy(dtype=float)
    stay = frame["stay"].to_numpy(dtype=float)
    missing = np.isnan(stay)
    if np.any(missing != (active == 0.0)):
        raise ValidationError(
            "panel is incoherent: stay must be missing exactly when active = 0"
        )
    out = frame.copy()
    out[AFTER] = out["period"].astype(float)
    out[INTERACTION] = out[ACQUIRED].astype(float) * out[AFTER]
    return out


def _fe_dummies(deal_year_fe: bool, company_fe: bool):
    dummies = []
    if deal_year_fe:
        dummies.append("deal_year")
    if company_fe:
        dummies.append("deal_cluster_id")
    return dummies


def did_ols(
    frame,
    *,
    covariates=DEFAULT_COVARIATES,
    deal_year_fe: bool = False,
    company_fe: bool = False,
    drop_reference: dict | None = None,
) -> FitResult:
    """Censored OLS of stay on the DiD terms over active rows only."""
    prepared = _prepare(frame)
    active = prepared[prepared["active"] == 1]
    terms = [ACQUIRED, AFTER, INTERACTION, *covariates]
    design = build_design(
        active,
        terms,
        _fe_dummies(deal_year_fe, company_fe),
        drop_reference=drop_reference,
    )
    return ols(design, active["stay"].to_numpy(dtype=float))


def did_heckman(
    frame,
    *,
    covariates=DEFAULT_COVARIATES,
    exclusion=EXCLUSION,
    deal_year_fe: bool = False,
    company_fe: bool = False,
    corrected_se: bool = False,
) -> HeckmanResult:
    """Two-step selection model: activity probit, then the stay equation."""
    prepared = _prepare(frame)
    selection_terms = [ACQUIRED, AFTER, INTERACTION, *covariates]
    for name in exclusion:
        if name not in selection_terms:
            selection_terms.append(name)
    outcome_terms = [t for t in selection_terms if t not in exclusion]
    return heckman_two_step(
        prepared,
        selection_terms,
        outcome_terms,
        exclusion=exclusion,
        dummies=_fe_dummies(deal_year_fe, company_fe),
        corrected_se=corrected_se,
    )


def main_specifications(frame) -> dict:
    """The three headline columns: OLS, Heckman, Heckman with both FE."""
    return {
        "ols": did_ols(frame),
        "heckman": did_heckman(frame),
        "heckman_fe": did_heckman(frame, deal_year_fe=True, company_fe=True),
    }


def _dosage_prepare(frame):
    prepared = _prepare(frame)
    labels = prepared["dosage"].astype(str)
    known = set(DOSAGE_LEVELS) | {"control"}
    unassigned = ~labels.isin(sorted(known))
    if unassigned.any():
        dropped = prepared.loc[unassigned, "inventor_id"].nunique()
        warnings.warn(
            f"dropping {dropped} inventor(s) without a dosage label from the "
            "dosage regression"
        )
        prepared = prepared[~unassigned]
        labels = labels[~unassigned]
    if not (labels.isin(DOSAGE_LEVELS)).any():
        raise ValidationError("dosage regression needs at least one dosed inventor")
    for level in DOSAGE_LEVELS:
        indicator = (labels == level).astype(float)
        prepared[f"dose_{level}"] = indicator
        prepared[f"dose_{level}_x_after"] = indicator * prepared[AFTER]
    return prepared


def _dosage_terms(covariates, with_age: bool):
    terms = []
    for level in DOSAGE_LEVELS:
        terms.append(f"dose_{level}")
    terms.append(AFTER)
    for level in DOSAGE_LEVELS:
        terms.append(f"dose_{level}_x_after")
    terms.extend(covariates)
    if with_age and "age" not in terms:
        terms.append("age")
    return terms


def did_dosage(
    frame,
    *,
    covariates=("exclusivity", "lpatents"),
    deal_year_fe_third: bool = True,
) -> dict:
    """Dosage variant: acquired is replaced by three similarity-tercile
    indicators (control inventors are the reference) and their After
    interactions; estimated under the same three specifications as the
    main table. A dosage level with no rows is pruned with a warning.
    """
    prepared = _dosage_prepare(frame)
    dose_terms = [f"dose_{lvl}" for lvl in DOSAGE_LEVELS]
    dose_inter = [f"dose_{lvl}_x_after" for lvl in DOSAGE_LEVELS]
    prunable = tuple(dose_terms + dose_inter)

    active = prepared[prepared["active"] == 1]
    ols_design = build_design(
        active,
        _dosage_terms(covariates, with_age=True),
        prunable=prunable,
    )
    results = {"ols": ols(ols_design, active["stay"].to_numpy(dtype=float))}

    selection_terms = _dosage_terms(covariates, with_age=True)
    outcome_terms = _dosage_terms(covariates, with_age=False)
    results["heckman"] = heckman_two_step(
        prepared,
        selection_terms,
        outcome_terms,
        exclusion=EXCLUSION,
        prunable=prunable,
    )
    fe = _fe_dummies(deal_year_fe_third, True)
    results["heckman_fe"] = heckman_two_step(
        prepared,
        selection_terms,
        outcome_terms,
        exclusion=EXCLUSION,
        dummies=fe,
        prunable=prunable,
    )
    return results


def predict_conditional_stay(result, frame, *, clip: bool = True) -> dict[str, float]:
    """E[stay | active, x] at group-mean covariates per dosage group.

    For a Heckman result the prediction adds the Mills term evaluated at
    the group-mean selection index. Values outside [0, 1] are clipped
    with a warning; the linear functional form does not enforce the
    bound on its own.
    """
    prepared = _dosage_prepare(frame)
    after = prepared[prepared[AFTER] == 1.0]
    if isinstance(result, HeckmanResult):
        outcome = result.outcome
        selection = result.selection
        mills_coef = result.mills_coef
    else:
        outcome, selection, mills_coef = result, None, 0.0

    def column_mean(sub, name):
        if name == "const":
            return 1.0
        if "=" in name:
            block, _, category = name.partition("=")
            return float((sub[block].astype(str) == category).mean())
        return float(sub[name].mean())

    predictions = {}
    for group in ("control", *DOSAGE_LEVELS):
        sub = after[after["dosage"].astype(str) == group]
        if len(sub) == 0:
            continue
        value = sum(
            outcome.coef(name) * column_mean(sub, name)
            for name in outcome.columns
            if name != "mills"
        )
        if selection is not None and np.isfinite(mills_coef):
            index = sum(
                selection.coef(name) * column_mean(sub, name)
                for name in selection.columns
            )
            value += mills_coef * inverse_mills(index)
        if clip and not 0.0 <= value <= 1.0:
            warnings.warn(
                f"conditional stay prediction for {group!r} outside [0, 1]; clipped"
            )
            value = float(np.clip(value, 0.0, 1.0))
        predictions[group] = float(value)
    return predictions


@dataclass
class PlaceboResult:
    scheme: str
    seed: int
    estimates: np.ndarray
    pvalues: np.ndarray

    @property
    def n_permutations(self) -> int:
        return len(self.estimates)

    @property
    def mean_estimate(self) -> float:
        return float(self.estimates.mean())

    @property
    def rejection_rate(self) -> float:
        return float((self.pvalues < 0.05).mean())


def placebo(
    frame,
    scheme: str = "all",
    n_permutations: int = 200,
    seed: int = 0,
    *,
    covariates=DEFAULT_COVARIATES,
    deal_year_fe: bool = False,
    company_fe: bool = False,
) -> PlaceboResult:
    """Permutation placebo: reassign the acquired label, re-estimate.

    Schemes: "all" flips the labels inside each matched pair with
    probability 1/2; "within_treated" / "within_control" restrict to one
    arm and split its inventors into balanced pseudo arms. Deterministic
    given the seed.
    """
    if scheme not in PLACEBO_SCHEMES:
        raise ValidationError(
            f"unknown placebo scheme {scheme!r}; expected one of {PLACEBO_SCHEMES}"
        )
    if n_permutations < 1:
        raise ValidationError("placebo needs at least one permutation")
    prepared = _prepare(frame)
    rng = np.random.default_rng(seed)
    estimates, pvalues = [], []

    if scheme == "all":
        pair_ids = prepared["pair_id"].to_numpy()
        unique_pairs = sorted(set(pair_ids))
        pair_pos = {pid: i for i, pid in enumerate(unique_pairs)}
        positions = np.array([pair_pos[p] for p in pair_ids])
        base = prepared[ACQUIRED].to_numpy(dtype=float)
        for _ in range(n_permutations):
            flips = rng.random(len(unique_pairs)) < 0.5
            relabeled = np.where(flips[positions], 1.0 - base, base)
            estimates_row = _placebo_fit(
                prepared, relabeled, covariates, deal_year_fe, company_fe
            )
            estimates.append(estimates_row[0])
            pvalues.append(estimates_row[1])
    else:
        arm = 1.0 if scheme == "within_treated" else 0.0
        sub = prepared[prepared[ACQUIRED] == arm]
        inventors = sorted(set(sub["inventor_id"]))
        if len(inventors) < 2:
            raise ValidationError(
                f"placebo scheme {scheme!r} needs at least two inventors in the arm"
            )
        inv_pos = {inv: i for i, inv in enumerate(inventors)}
        positions = np.array([inv_pos[i] for i in sub["inventor_id"]])
        half = len(inventors) // 2
        for _ in range(n_permutations):
            order = rng.permutation(len(inventors))
            pseudo_treated = np.zeros(len(inventors))
            pseudo_treated[order[:half]] = 1.0
            relabeled = pseudo_treated[positions]
            estimates_row = _placebo_fit(
                sub, relabeled, covariates, deal_year_fe, company_fe
            )
            estimates.append(estimates_row[0])
            pvalues.append(estimates_row[1])

    return PlaceboResult(
        scheme=scheme,
        seed=seed,
        estimates=np.array(estimates),
        pvalues=np.array(pvalues),
    )


def _placebo_fit(prepared, relabeled, covariates, deal_year_fe, company_fe):
    shuffled = prepared.copy()
    shuffled[ACQUIRED] = relabeled
    shuffled[INTERACTION] = relabeled * shuffled[AFTER]
    active = shuffled[shuffled["active"] == 1]
    design = build_design(
        active,
        [ACQUIRED, AFTER, INTERACTION, *covariates],
        _fe_dummies(deal_year_fe, company_fe),
    )
    fit = ols(design, active["stay"].to_numpy(dtype=float))
    return fit.coef(INTERACTION), fit.pvalue_of(INTERACTION)


def split_by_experience(
    frame,
    cutoff: int = EXPERIENCE_CUTOFF,
    *,
    deal_year_fe: bool = False,
    company_fe: bool = False,
) -> dict:
    """Re-estimate the main specifications above and at-or-below an
    experience (age) cutoff. Both strata must be populated."""
    prepared = _prepare(frame)
    strata = {
        "above_cutoff": prepared[prepared["age"] > cutoff],
        "at_or_below_cutoff": prepared[prepared["age"] <= cutoff],
    }
    results = {}
    for label, sub in strata.items():
        if len(sub) == 0:
            raise ValidationError(
                f"experience stratum {label!r} is empty at cutoff {cutoff}"
            )
        results[label] = {
            "ols": did_ols(sub, deal_year_fe=deal_year_fe, company_fe=company_fe),
            "heckman": did_heckman(
                sub, deal_year_fe=deal_year_fe, company_fe=company_fe
            ),
        }
    return results


def naive_difference(frame, *, covariates=DEFAULT_COVARIATES) -> dict:
    """Treated-only before/after contrast; After is the effect term.

    The comparison against the DiD interaction shows how much of the raw
    drop is the secular trend every inventor shares.
    """
    prepared = _prepare(frame)
    treated = prepared[prepared[ACQUIRED] == 1]
    if len(treated) == 0:
        raise ValidationError("naive difference needs treated rows")
    active = treated[treated["active"] == 1]
    terms = [AFTER, *covariates]
    design = build_design(active, terms)
    results = {"ols": ols(design, active["stay"].to_numpy(dtype=float))}
    selection_terms = [AFTER, *covariates]
    outcome_terms = [t for t in selection_terms if t not in EXCLUSION]
    results["heckman"] = heckman_two_step(
        treated,
        selection_terms,
        outcome_terms,
        exclusion=EXCLUSION,
    )
    return results
