"""Orchestration shared by the command-line stages and the recovery oracle."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .cohort import CohortBuildResult, TreatmentCohort, build_cohorts, make_window
from .corpus import (
    AliasSet,
    Corpus,
    DealEvent,
    fold_name,
    merge_assignee_ids,
    resolve_aliases,
)
from .errors import ValidationError
from .estimators import did_heckman, did_ols
from .matching import (
    FirmMatch,
    InventorPair,
    SimilarityWeights,
    match_firms,
    match_inventors,
)
from .panel import PanelObservation, build_panel, panel_frame


@dataclass
class MatchingOutput:
    build: CohortBuildResult
    cohorts_by_deal: dict[str, TreatmentCohort]
    firm_matches: dict[str, list[FirmMatch]]
    pairs: list[InventorPair]
    excluded_inventors: frozenset[str]


def run_matching(
    corpus: Corpus,
    deals: list[DealEvent],
    *,
    recruit_years: int = 7,
    before_years: int = 4,
    after_years: int = 4,
    deal_span: tuple[int, int] | None = None,
    firm_threshold: float = 0.8,
    inventor_threshold: float = 0.9,
    weights: SimilarityWeights = SimilarityWeights(),
) -> MatchingOutput:
    """Cohorts, firm matches, and one-to-one inventor pairs for all deals."""
    build = build_cohorts(
        deals,
        corpus,
        recruit_years=recruit_years,
        before_years=before_years,
        after_years=after_years,
        deal_span=deal_span,
    )
    if not build.cohorts:
        reasons = sorted({a.reason for a in build.audits if a.verdict == "excluded"})
        raise ValidationError(
            "no eligible treatment cohorts; exclusion reasons seen: "
            + "; ".join(reasons)
        )
    excluded = frozenset(build.treated_inventors | build.freelancer_inventors)
    firm_matches: dict[str, list[FirmMatch]] = {}
    pairs: list[InventorPair] = []
    for cohort in build.cohorts:
        matches = match_firms(corpus, cohort, weights, firm_threshold)
        firm_matches[cohort.deal_id] = matches
        pairs.extend(
            match_inventors(
                corpus, cohort, matches, weights, inventor_threshold, excluded
            )
        )
    pairs.sort(key=lambda p: p.pair_id)
    cohorts_by_deal = {c.deal_id: c for c in build.cohorts}
    return MatchingOutput(
        build=build,
        cohorts_by_deal=cohorts_by_deal,
        firm_matches=firm_matches,
        pairs=pairs,
        excluded_inventors=excluded,
    )


def run_panel(corpus: Corpus, matching: MatchingOutput) -> list[PanelObservation]:
    if not matching.pairs:
        raise ValidationError("matching produced zero inventor pairs")
    return build_panel(corpus, matching.cohorts_by_deal, matching.pairs)


def window_frames(
    corpus: Corpus, matching: MatchingOutput, after_grid=(3, 4, 5, 6)
) -> dict[int, object]:
    """Rebuild the outcome panel for each after-window length.

    Pairs and cohorts stay fixed; only the outcome window moves, so
    differences across the returned frames isolate sensitivity to a.
    """
    frames = {}
    for a in after_grid:
        rebuilt = {}
        for deal_id, cohort in matching.cohorts_by_deal.items():
            window = make_window(
                cohort.window.event_year,
                cohort.window.recruit_years,
                cohort.window.before_years,
                int(a),
            )
            rebuilt[deal_id] = replace(cohort, window=window)
        frames[int(a)] = panel_frame(build_panel(corpus, rebuilt, matching.pairs))
    return frames


def window_robustness(
    corpus: Corpus,
    matching: MatchingOutput,
    after_grid=(3, 4, 5, 6),
    *,
    estimator: str = "ols",
) -> dict[int, object]:
    """One headline fit per after-window length over fixed pairs."""
    if estimator not in ("ols", "heckman"):
        raise ValidationError(f"unknown estimator {estimator!r}")
    frames = window_frames(corpus, matching, after_grid)
    return {
        a: did_ols(frame) if estimator == "ols" else did_heckman(frame)
        for a, frame in frames.items()
    }


def resolve_deal_aliases(
    corpus: Corpus, deals: list[DealEvent], threshold: float = 0.7
) -> dict[str, AliasSet]:
    """Alias candidates for every acquisition deal, keyed by deal id."""
    assignees = sorted(corpus.assignee_names.items())
    return {
        deal.deal_id: resolve_aliases(deal, assignees, threshold)
        for deal in deals
        if deal.deal_type == "acquisition"
    }


def apply_alias_merge(
    corpus: Corpus,
    deals: list[DealEvent],
    alias_sets: dict[str, AliasSet],
) -> Corpus:
    """Rewrite confirmed alias assignee ids onto their canonical deal firms.

    Review-queue candidates carry which side they resemble; confirmed
    ids that never sat in a queue (exact folded-name matches) are
    attributed by re-folding. An id confirmed for two different firms is
    ambiguous and rejected.
    """
    mapping: dict[str, str] = {}
    for deal in deals:
        alias_set = alias_sets.get(deal.deal_id)
        if alias_set is None:
            continue
        targets = {c.assignee_id: c.target for c in alias_set.review_queue}
        for assignee_id in sorted(alias_set.confirmed):
            if assignee_id in (deal.acquired_id, deal.acquirer_id):
                continue
            side = targets.get(assignee_id)
            if side is None:
                folded = fold_name(corpus.assignee_names.get(assignee_id, ""))
                side = (
                    "acquired"
                    if folded == fold_name(deal.acquired_name)
                    else "acquirer"
                )
            canonical = (
                deal.acquired_id if side == "acquired" else deal.acquirer_id
            )
            previous = mapping.get(assignee_id)
            if previous is not None and previous != canonical:
                raise ValidationError(
                    f"assignee {assignee_id!r} confirmed as an alias of both "
                    f"{previous!r} and {canonical!r}"
                )
            mapping[assignee_id] = canonical
    if not mapping:
        return corpus
    return Corpus(merge_assignee_ids(corpus.records, mapping), corpus.span)
