"""Two-stage similarity matching: control firms, then control inventors.

Similarity combines a cosine over IPC main-group count profiles with
age and size deviations flipped into similarities, weighted (0.5, 0.25,
0.25) by default. Firms match one-to-many at 0.8; inventors match
one-to-one at 0.9 by greedy assignment in descending best-score order
with lexicographic tie-breaks, so the whole stage is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cohort import EMPLOYEE, StudyWindow, TreatmentCohort, attribute_employees
from .corpus import Corpus
from .errors import ValidationError


@dataclass(frozen=True)
class TechProfile:
    owner: str
    counts: tuple[tuple[str, int], ...]
    # Distinct patents behind the counts; a patent with several main
    # groups contributes to each, so this is not the column sum.
    n_patents: int

    @property
    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)


def tech_profile(
    corpus: Corpus,
    entity_id: str,
    interval: tuple[int, int],
    kind: str = "firm",
) -> TechProfile:
    """Count patents per IPC main group for a firm or inventor.

    A patent with k distinct main groups contributes 1 to each of the k
    entries. An empty profile is an error: similarity against nothing is
    undefined.
    """
    if kind == "firm":
        patents = corpus.firm_patents(entity_id, interval)
    elif kind == "inventor":
        patents = corpus.inventor_patents(entity_id, interval)
    else:
        raise ValidationError(f"unknown profile kind {kind!r}")
    if not patents:
        raise ValidationError(
            f"{kind} {entity_id!r} has no patents in [{interval[0]}, {interval[1]})"
        )
    counts: dict[str, int] = {}
    for p in patents:
        for code in p.ipc_main_groups:
            counts[code] = counts.get(code, 0) + 1
    return TechProfile(entity_id, tuple(sorted(counts.items())), len(patents))


def cosine_similarity(p, q) -> float:
    """Cosine of two sparse count vectors keyed by IPC main group."""
    pc = p.as_dict if isinstance(p, TechProfile) else dict(p)
    qc = q.as_dict if isinstance(q, TechProfile) else dict(q)
    norm_p = math.sqrt(sum(v * v for v in pc.values()))
    norm_q = math.sqrt(sum(v * v for v in qc.values()))
    if norm_p == 0.0 or norm_q == 0.0:
        raise ValidationError("cosine similarity undefined for a zero profile")
    if len(pc) > len(qc):
        pc, qc = qc, pc
    dot = sum(v * qc.get(k, 0) for k, v in pc.items())
    return dot / (norm_p * norm_q)


def deviation(x: float, y: float) -> float:
    """|x - y| / (x + y): 0 when equal, approaching 1 as the gap widens."""
    if x < 0 or y < 0:
        raise ValidationError(f"deviation needs nonnegative inputs, got ({x}, {y})")
    if x + y == 0:
        raise ValidationError("deviation undefined when both values are zero")
    return abs(x - y) / (x + y)


@dataclass(frozen=True)
class SimilarityWeights:
    tech: float = 0.5
    age: float = 0.25
    size: float = 0.25

    def __post_init__(self) -> None:
        for name, w in (("tech", self.tech), ("age", self.age), ("size", self.size)):
            if w < 0:
                raise ValidationError(f"weight {name} must be nonnegative, got {w}")
        if abs(self.tech + self.age + self.size - 1.0) > 1e-12:
            raise ValidationError(
                f"weights must sum to 1, got {self.tech + self.age + self.size!r}"
            )


def combined_similarity(
    tech_sim: float,
    age_dev: float,
    size_dev: float,
    weights: SimilarityWeights = SimilarityWeights(),
) -> float:
    """Weighted blend with deviations flipped into similarities."""
    return (
        weights.tech * tech_sim
        + weights.age * (1.0 - age_dev)
        + weights.size * (1.0 - size_dev)
    )


@dataclass(frozen=True)
class FirmMatch:
    deal_id: str
    treated_firm_id: str
    control_firm_id: str
    tech_sim: float
    age_dev: float
    size_dev: float
    score: float


@dataclass(frozen=True)
class InventorPair:
    pair_id: str
    deal_id: str
    treated_firm_id: str
    control_firm_id: str
    treated_inventor_id: str
    control_inventor_id: str
    tech_sim: float
    tenure_dev: float
    activity_dev: float
    score: float


def _firm_features(corpus: Corpus, firm_id: str, window: StudyWindow):
    profile = tech_profile(corpus, firm_id, window.recruitment, kind="firm")
    age = window.event_year - corpus.first_year_of_firm(firm_id)
    size = profile.n_patents
    return profile, age, size


def match_firms(
    corpus: Corpus,
    cohort: TreatmentCohort,
    weights: SimilarityWeights = SimilarityWeights(),
    threshold: float = 0.8,
) -> list[FirmMatch]:
    """Score every control candidate against the treated firm.

    Accepted matches (score >= threshold) come back sorted by descending
    score with control-firm id as the tie-break. One treated firm may
    keep many controls.
    """
    treated_profile, treated_age, treated_size = _firm_features(
        corpus, cohort.treated_firm_id, cohort.window
    )
    matches = []
    for candidate in cohort.control_candidates:
        profile, age, size = _firm_features(corpus, candidate, cohort.window)
        tech = cosine_similarity(treated_profile, profile)
        age_dev = deviation(treated_age, age)
        size_dev = deviation(treated_size, size)
        score = combined_similarity(tech, age_dev, size_dev, weights)
        if score >= threshold:
            matches.append(
                FirmMatch(
                    deal_id=cohort.deal_id,
                    treated_firm_id=cohort.treated_firm_id,
                    control_firm_id=candidate,
                    tech_sim=tech,
                    age_dev=age_dev,
                    size_dev=size_dev,
                    score=score,
                )
            )
    return sorted(matches, key=lambda m: (-m.score, m.control_firm_id))


def _inventor_features(
    corpus: Corpus, inventor_id: str, firm_id: str, window: StudyWindow
):
    profile = tech_profile(corpus, inventor_id, window.recruitment, kind="inventor")
    tenure = window.event_year - corpus.first_year_with_firm(inventor_id, firm_id)
    activity = len(corpus.inventor_patents(inventor_id, window.recruitment))
    return profile, tenure, activity


def match_inventors(
    corpus: Corpus,
    cohort: TreatmentCohort,
    firm_matches: list[FirmMatch],
    weights: SimilarityWeights = SimilarityWeights(),
    threshold: float = 0.9,
    excluded_inventors: frozenset[str] | set[str] = frozenset(),
) -> list[InventorPair]:
    """Greedy one-to-one pairing of treated employees with control employees.

    Treated inventors are processed in descending order of their best
    available score (ties: lexicographic inventor id); each takes their
    best remaining control. Controls are consumed at most once per
    cohort, keyed by inventor id. Inventors in `excluded_inventors`
    (global freelancers, treated employees of any cohort) never enter
    the control pool.
    """
    window = cohort.window
    # Control pool: employees of accepted control firms, minus exclusions.
    pool: dict[str, tuple[str, tuple]] = {}
    for fm in firm_matches:
        if fm.deal_id != cohort.deal_id:
            continue
        for attribution in attribute_employees(corpus, fm.control_firm_id, window):
            if attribution.status != EMPLOYEE:
                continue
            inv = attribution.inventor_id
            if inv in excluded_inventors or inv in pool:
                continue
            pool[inv] = (
                fm.control_firm_id,
                _inventor_features(corpus, inv, fm.control_firm_id, window),
            )
    if not pool:
        return []

    treated_features = {
        inv: _inventor_features(corpus, inv, cohort.treated_firm_id, window)
        for inv in cohort.employee_ids
    }

    # Score every admissible (treated, control) edge once.
    edges: dict[str, list[tuple[float, str]]] = {inv: [] for inv in treated_features}
    details: dict[tuple[str, str], tuple[float, float, float]] = {}
    for t_inv, (t_profile, t_tenure, t_activity) in treated_features.items():
        for c_inv, (c_firm, (c_profile, c_tenure, c_activity)) in pool.items():
            tech = cosine_similarity(t_profile, c_profile)
            tenure_dev = deviation(t_tenure, c_tenure)
            activity_dev = deviation(t_activity, c_activity)
            score = combined_similarity(tech, tenure_dev, activity_dev, weights)
            if score >= threshold:
                edges[t_inv].append((score, c_inv))
                details[(t_inv, c_inv)] = (tech, tenure_dev, activity_dev)
    for candidates in edges.values():
        candidates.sort(key=lambda e: (-e[0], e[1]))

    def best_score(t_inv: str) -> float:
        candidates = edges[t_inv]
        return candidates[0][0] if candidates else -1.0

    order = sorted(treated_features, key=lambda inv: (-best_score(inv), inv))
    consumed: set[str] = set()
    pairs = []
    for t_inv in order:
        chosen = next(
            ((s, c) for s, c in edges[t_inv] if c not in consumed), None
        )
        if chosen is None:
            continue  # unmatched treated inventor is discarded
        score, c_inv = chosen
        consumed.add(c_inv)
        tech, tenure_dev, activity_dev = details[(t_inv, c_inv)]
        pairs.append(
            InventorPair(
                pair_id=f"{cohort.deal_id}:{t_inv}",
                deal_id=cohort.deal_id,
                treated_firm_id=cohort.treated_firm_id,
                control_firm_id=pool[c_inv][0],
                treated_inventor_id=t_inv,
                control_inventor_id=c_inv,
                tech_sim=tech,
                tenure_dev=tenure_dev,
                activity_dev=activity_dev,
                score=score,
            )
        )
    return sorted(pairs, key=lambda p: p.pair_id)


def _pair_covariates(corpus: Corpus, cohorts_by_deal, pairs):
    """Per-inventor matching covariates for balance/overlap diagnostics."""
    rows = []
    for pair in pairs:
        cohort = cohorts_by_deal[pair.deal_id]
        window = cohort.window
        for arm, inv, firm in (
            (1, pair.treated_inventor_id, pair.treated_firm_id),
            (0, pair.control_inventor_id, pair.control_firm_id),
        ):
            patents = corpus.inventor_patents(inv, window.recruitment)
            focal = sum(1 for p in patents if p.assignee_id == firm)
            rows.append(
                {
                    "inventor_id": inv,
                    "treated": arm,
                    "age": window.event_year - corpus.first_year_of_inventor(inv),
                    "patents": len(patents),
                    "exclusivity": focal / len(patents),
                    "deal_year": window.event_year,
                }
            )
    return rows


def balance_table(corpus: Corpus, cohorts_by_deal, pairs):
    """Per-arm mean/sd/count of the matching covariates, one row each."""
    import pandas as pd

    if not pairs:
        raise ValidationError("balance table needs at least one pair")
    frame = pd.DataFrame(_pair_covariates(corpus, cohorts_by_deal, pairs))
    out = {}
    for arm, label in ((1, "treated"), (0, "control")):
        sub = frame[frame["treated"] == arm]
        for stat, series in (
            ("mean", sub.mean(numeric_only=True)),
            ("sd", sub.std(numeric_only=True, ddof=1)),
        ):
            out[(label, stat)] = series
        out[(label, "n")] = sub.count(numeric_only=True).astype(float)
    table = pd.DataFrame(out).loc[["age", "patents", "exclusivity", "deal_year"]]
    table.columns = pd.MultiIndex.from_tuples(table.columns)
    return table


@dataclass
class OverlapResult:
    bin_edges: np.ndarray
    treated_density: np.ndarray
    control_density: np.ndarray
    treated_scores: np.ndarray
    control_scores: np.ndarray

    @property
    def treated_mean(self) -> float:
        return float(self.treated_scores.mean())

    @property
    def control_mean(self) -> float:
        return float(self.control_scores.mean())


def propensity_overlap(
    corpus: Corpus, cohorts_by_deal, pairs, bins: int = 20
) -> OverlapResult:
    """Probit of arm membership on matching covariates, plus score histograms.

    Densities are normalized per arm so each histogram integrates to 1
    over [0, 1]; the plot-ready arrays double as a numeric overlap check.
    """
    from scipy.special import ndtr

    from .estimators import build_design, probit

    import pandas as pd

    if not pairs:
        raise ValidationError("propensity overlap needs at least one pair")
    frame = pd.DataFrame(_pair_covariates(corpus, cohorts_by_deal, pairs))
    frame["lpatents"] = np.log(frame["patents"].to_numpy(dtype=float))
    design = build_design(frame, ["age", "exclusivity", "lpatents"])
    fit = probit(design, frame["treated"].to_numpy(dtype=float))
    scores = ndtr(design.matrix @ fit.params)
    treated = scores[frame["treated"].to_numpy() == 1]
    control = scores[frame["treated"].to_numpy() == 0]
    edges = np.linspace(0.0, 1.0, bins + 1)
    width = 1.0 / bins
    t_hist = np.histogram(treated, bins=edges)[0] / (len(treated) * width)
    c_hist = np.histogram(control, bins=edges)[0] / (len(control) * width)
    return OverlapResult(
        bin_edges=edges,
        treated_density=t_hist,
        control_density=c_hist,
        treated_scores=treated,
        control_scores=control,
    )
