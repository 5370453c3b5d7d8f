"""Outcome panel: two rows (before/after) per inventor in a matched pair.

stay is missing exactly when active = 0; the estimators rely on that
coherence to build the selection model. Covariates are frozen at match
time so before and after rows of the same inventor share them.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .cohort import TreatmentCohort
from .corpus import Corpus
from .errors import ValidationError
from .matching import InventorPair, cosine_similarity, tech_profile

PANEL_HEADER = [
    "pair_id",
    "inventor_id",
    "deal_cluster_id",
    "deal_year",
    "period",
    "acquired",
    "active",
    "stay",
    "exclusivity",
    "age",
    "tenure",
    "lpatents",
    "dosage",
]

DOSAGE_QUANTILES = (1 / 3, 2 / 3)


@dataclass(frozen=True)
class PanelObservation:
    pair_id: str
    inventor_id: str
    deal_cluster_id: str
    deal_year: int
    period: int
    acquired: int
    active: int
    stay: int | None
    exclusivity: float
    age: int
    tenure: int
    lpatents: float
    dosage: str

    def __post_init__(self):
        if self.period not in (0, 1):
            raise ValidationError(f"period must be 0 or 1, got {self.period}")
        if (self.stay is None) != (self.active == 0):
            raise ValidationError(
                f"{self.pair_id}/{self.inventor_id}: stay must be missing "
                "exactly when active = 0"
            )


def outcome_active(corpus: Corpus, inventor_id: str, interval: tuple[int, int]) -> int:
    """1 if the inventor files any patent during the half-open interval."""
    return int(bool(corpus.inventor_patents(inventor_id, interval)))


def outcome_stay(
    corpus: Corpus,
    inventor_id: str,
    firm_ids: set[str] | frozenset[str],
    interval: tuple[int, int],
) -> int | None:
    """1 if any filing in the interval is assigned to a focal firm; None
    when the inventor is inactive (the outcome is unobserved, not zero)."""
    patents = corpus.inventor_patents(inventor_id, interval)
    if not patents:
        return None
    return int(any(p.assignee_id in firm_ids for p in patents))


def _covariates(corpus: Corpus, inventor_id: str, firm_id: str, cohort: TreatmentCohort):
    window = cohort.window
    recruitment = window.recruitment
    patents = corpus.inventor_patents(inventor_id, recruitment)
    if not patents:
        raise ValidationError(
            f"inventor {inventor_id} has no recruitment-window patents; "
            "pairs must come from the matching stage"
        )
    focal = sum(1 for p in patents if p.assignee_id == firm_id)
    return {
        "exclusivity": focal / len(patents),
        "age": window.event_year - corpus.first_year_of_inventor(inventor_id),
        "tenure": window.event_year - corpus.first_year_with_firm(inventor_id, firm_id),
        "lpatents": math.log(len(patents)),
    }


def assign_dosage(
    corpus: Corpus,
    cohorts_by_deal: dict[str, TreatmentCohort],
    pairs: list[InventorPair],
) -> dict[str, str]:
    """Tercile labels over treated inventors' acquirer-overlap similarity.

    The score is the cosine similarity between the inventor's pre-event
    technology profile and the acquirer's recruitment-window profile.
    Terciles are pooled across deals; ties at a boundary go to the lower
    bucket. Treated inventors whose acquirer has no profile stay
    unlabeled and are dropped later with a warning.
    """
    scores: dict[str, float] = {}
    unassigned: list[str] = []
    acquirer_profiles: dict[str, dict] = {}
    for pair in pairs:
        cohort = cohorts_by_deal[pair.deal_id]
        window = cohort.window
        acquirer = cohort.deal.acquirer_id
        if pair.deal_id not in acquirer_profiles:
            try:
                profile = tech_profile(
                    corpus, acquirer, window.recruitment, kind="firm"
                ).as_dict
            except ValidationError:
                profile = {}
            acquirer_profiles[pair.deal_id] = profile
        profile = acquirer_profiles[pair.deal_id]
        if not profile:
            unassigned.append(pair.treated_inventor_id)
            continue
        pre_event = (window.event_year - window.recruit_years, window.event_year)
        inventor_profile = tech_profile(
            corpus, pair.treated_inventor_id, pre_event, kind="inventor"
        ).as_dict
        scores[pair.treated_inventor_id] = cosine_similarity(
            inventor_profile, profile
        )
    if unassigned:
        warnings.warn(
            f"{len(unassigned)} treated inventor(s) have no acquirer profile; "
            "left without a dosage label"
        )
    labels = {inv: "" for inv in unassigned}
    if scores:
        values = np.array(sorted(scores.values()))
        low_cut, mid_cut = np.quantile(values, DOSAGE_QUANTILES, method="lower")
        for inv, score in scores.items():
            if score <= low_cut:
                labels[inv] = "low"
            elif score <= mid_cut:
                labels[inv] = "medium"
            else:
                labels[inv] = "high"
    return labels


def build_panel(
    corpus: Corpus,
    cohorts_by_deal: dict[str, TreatmentCohort],
    pairs: list[InventorPair],
) -> list[PanelObservation]:
    """Assemble the four rows per matched pair (two inventors, two periods)."""
    if not pairs:
        raise ValidationError("cannot build a panel from zero pairs")
    dosage = assign_dosage(corpus, cohorts_by_deal, pairs)
    observations: list[PanelObservation] = []
    for pair in pairs:
        cohort = cohorts_by_deal[pair.deal_id]
        window = cohort.window
        acquirer = cohort.deal.acquirer_id
        members = (
            (1, pair.treated_inventor_id, pair.treated_firm_id,
             dosage.get(pair.treated_inventor_id, "")),
            (0, pair.control_inventor_id, pair.control_firm_id, "control"),
        )
        for acquired, inventor, firm, label in members:
            covs = _covariates(corpus, inventor, firm, cohort)
            for period, interval in ((0, window.before), (1, window.after)):
                focal = {firm}
                if acquired and period == 1:
                    focal.add(acquirer)
                active = outcome_active(corpus, inventor, interval)
                stay = outcome_stay(corpus, inventor, focal, interval)
                observations.append(
                    PanelObservation(
                        pair_id=pair.pair_id,
                        inventor_id=inventor,
                        deal_cluster_id=pair.deal_id,
                        deal_year=window.event_year,
                        period=period,
                        acquired=acquired,
                        active=active,
                        stay=stay,
                        dosage=label,
                        **covs,
                    )
                )
    return observations


def panel_frame(observations: list[PanelObservation]) -> pd.DataFrame:
    """Panel rows as a DataFrame; stay becomes NaN where unobserved."""
    if not observations:
        raise ValidationError("empty panel")
    frame = pd.DataFrame(
        {
            name: [getattr(obs, name) for obs in observations]
            for name in PANEL_HEADER
        }
    )
    frame["stay"] = frame["stay"].astype(float)
    for name in ("deal_year", "period", "acquired", "active", "age", "tenure"):
        frame[name] = frame[name].astype(int)
    return frame


def write_panel(path, observations: list[PanelObservation]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(PANEL_HEADER)
        for obs in observations:
            writer.writerow(
                [
                    obs.pair_id,
                    obs.inventor_id,
                    obs.deal_cluster_id,
                    obs.deal_year,
                    obs.period,
                    obs.acquired,
                    obs.active,
                    "" if obs.stay is None else obs.stay,
                    repr(obs.exclusivity),
                    obs.age,
                    obs.tenure,
                    repr(obs.lpatents),
                    obs.dosage,
                ]
            )


def read_panel(path) -> pd.DataFrame:
    """Load a panel CSV back into the estimator-facing frame."""
    frame = pd.read_csv(
        path,
        dtype={
            "pair_id": str,
            "inventor_id": str,
            "deal_cluster_id": str,
            "dosage": str,
        },
        keep_default_na=False,
        na_values={"stay": [""]},
    )
    if list(frame.columns) != PANEL_HEADER:
        raise ValidationError(
            f"{path}: expected panel header {PANEL_HEADER}, got {list(frame.columns)}"
        )
    frame["stay"] = frame["stay"].astype(float)
    for name in ("deal_year", "period", "acquired", "active", "age", "tenure"):
        frame[name] = frame[name].astype(int)
    for name in ("exclusivity", "lpatents"):
        frame[name] = frame[name].astype(float)
    return frame
