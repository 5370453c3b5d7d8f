"""Similarity machinery and two-stage firm/inventor matching."""
from __future__ import annotations

import math

import numpy as np
import pytest

from patentdid.cohort import build_cohorts
from patentdid.corpus import Corpus
from patentdid.errors import ValidationError
from patentdid.matching import (
    SimilarityWeights,
    balance_table,
    combined_similarity,
    cosine_similarity,
    deviation,
    match_firms,
    match_inventors,
    propensity_overlap,
    tech_profile,
)

from conftest import record


# ---------------------------------------------------------------- profiles

def test_tech_profile_counts_each_listed_group(study):
    corpus, _ = study
    prof = tech_profile(corpus, "T", (1993, 1996), kind="firm")
    # PT3 carries two main groups and adds one count to each.
    assert prof.as_dict == {"A01B001": 4, "A01B002": 2, "C03D005": 1}
    assert prof.n_patents == 6
    inv = tech_profile(corpus, "t1", (1993, 1996), kind="inventor")
    assert inv.as_dict == {"A01B001": 2, "A01B002": 1, "C03D005": 1}


def test_tech_profile_empty_interval_is_an_error(study):
    corpus, _ = study
    with pytest.raises(ValidationError):
        tech_profile(corpus, "T", (1980, 1981), kind="firm")


def test_cosine_similarity_oracle_values():
    assert cosine_similarity({"a": 1, "b": 2}, {"a": 2, "b": 1}) == pytest.approx(0.8, abs=1e-12)
    assert cosine_similarity({"a": 3}, {"a": 7}) == pytest.approx(1.0, abs=1e-12)
    assert cosine_similarity({"a": 1}, {"b": 1}) == 0.0
    with pytest.raises(ValidationError):
        cosine_similarity({}, {"a": 1})


def test_cosine_similarity_matches_numpy_on_random_profiles():
    rng = np.random.default_rng(5)
    keys = [f"K{j}" for j in range(6)]
    for _ in range(100):
        a = {k: float(v) for k, v in zip(keys, rng.integers(0, 5, size=6)) if v > 0}
        b = {k: float(v) for k, v in zip(keys, rng.integers(0, 5, size=6)) if v > 0}
        if not a or not b:
            continue
        va = np.array([a.get(k, 0.0) for k in keys])
        vb = np.array([b.get(k, 0.0) for k in keys])
        expected = float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))
        assert cosine_similarity(a, b) == pytest.approx(expected, abs=1e-12)


def test_deviation_values():
    assert deviation(7, 5) == pytest.approx(1 / 6)
    assert deviation(5, 7) == pytest.approx(1 / 6)
    assert deviation(3, 3) == 0.0
    with pytest.raises(ValidationError):
        deviation(0, 0)
    with pytest.raises(ValidationError):
        deviation(-1, 2)


def test_similarity_weights_validation():
    SimilarityWeights(tech=0.6, age=0.2, size=0.2)
    with pytest.raises(ValidationError):
        SimilarityWeights(tech=0.5, age=0.3, size=0.3)
    with pytest.raises(ValidationError):
        SimilarityWeights(tech=1.2, age=-0.1, size=-0.1)


def test_combined_similarity_formula():
    w = SimilarityWeights()
    got = combined_similarity(0.9, 0.2, 0.4, w)
    assert got == pytest.approx(0.5 * 0.9 + 0.25 * 0.8 + 0.25 * 0.6, abs=1e-12)


# ---------------------------------------------------------------- firms

def _cohort(study):
    corpus, deal = study
    return corpus, build_cohorts([deal], corpus).cohorts[0]


def test_match_firms_score_oracle(study):
    corpus, cohort = _cohort(study)
    matches = match_firms(corpus, cohort)
    assert [m.control_firm_id for m in matches] == ["C"]
    m = matches[0]
    # Hand derivation: profiles T=(4,2,1), C=(3,2,1) over shared groups,
    # cos = 17/sqrt(21*14); both firms first file 1993 so age_dev = 0;
    # recruitment sizes 6 vs 5 so size_dev = 1/11.
    assert m.tech_sim == pytest.approx(17 / math.sqrt(294), abs=1e-12)
    assert m.age_dev == 0.0
    assert m.size_dev == pytest.approx(1 / 11, abs=1e-12)
    expect = 0.5 * (17 / math.sqrt(294)) + 0.25 + 0.25 * (10 / 11)
    assert m.score == pytest.approx(expect, abs=1e-12)


def test_match_firms_threshold_excludes_weak_candidates(study):
    corpus, cohort = _cohort(study)
    # X and Y each hold one shared-group patent; their combined score is
    # 0.5*(4/sqrt(21)) + 0.25*(1 - 1/6) + 0.25*(1 - 5/7), about 0.716.
    weak = 0.5 * (4 / math.sqrt(21)) + 0.25 * (5 / 6) + 0.25 * (2 / 7)
    assert weak < 0.8
    matches = match_firms(corpus, cohort, threshold=0.8)
    assert [m.control_firm_id for m in matches] == ["C"]
    relaxed = match_firms(corpus, cohort, threshold=0.7)
    assert [m.control_firm_id for m in relaxed] == ["C", "X", "Y"]
    for m in relaxed[1:]:
        assert m.score == pytest.approx(weak, abs=1e-12)


def test_match_firms_sorted_by_score_then_id(study):
    corpus, cohort = _cohort(study)
    relaxed = match_firms(corpus, cohort, threshold=0.5)
    scores = [m.score for m in relaxed]
    assert scores == sorted(scores, reverse=True)
    # X and Y tie exactly; the id breaks the tie.
    tied = [m.control_firm_id for m in relaxed if m.score == relaxed[-1].score]
    assert tied == sorted(tied)


# ---------------------------------------------------------------- inventors

def test_match_inventors_one_to_one_greedy(study):
    corpus, cohort = _cohort(study)
    firm_matches = match_firms(corpus, cohort)
    pairs = match_inventors(
        corpus, cohort, firm_matches, excluded_inventors=frozenset({"t1", "t2", "f1"})
    )
    assert [(p.treated_inventor_id, p.control_inventor_id) for p in pairs] == [
        ("t1", "c1"),
        ("t2", "c2"),
    ]
    assert [p.pair_id for p in pairs] == ["T@2000:t1", "T@2000:t2"]
    for p in pairs:
        assert p.score == pytest.approx(1.0, abs=1e-9)
    controls = [p.control_inventor_id for p in pairs]
    assert len(set(controls)) == len(controls)


def test_match_inventors_greedy_priority_and_exclusions(study):
    corpus, cohort = _cohort(study)
    firm_matches = match_firms(corpus, cohort)
    # With only c2 in the pool, both treated inventors clear the 0.9 bar
    # (the cross pair t1/c2 scores 0.5*(5/sqrt(30)) + 0.5, about 0.956),
    # but t2's perfect score wins the greedy draft and t1 is discarded.
    cross = 0.5 * (5 / math.sqrt(30)) + 0.5
    assert 0.9 < cross < 1.0
    pairs = match_inventors(
        corpus,
        cohort,
        firm_matches,
        excluded_inventors=frozenset({"t1", "t2", "f1", "c1"}),
    )
    assert [(p.treated_inventor_id, p.control_inventor_id) for p in pairs] == [("t2", "c2")]
    assert pairs[0].score == pytest.approx(1.0, abs=1e-9)
    # Mirror case: only c1 available, t1 wins, t2 is discarded.
    pairs = match_inventors(
        corpus,
        cohort,
        firm_matches,
        excluded_inventors=frozenset({"t1", "t2", "f1", "c2"}),
    )
    assert [(p.treated_inventor_id, p.control_inventor_id) for p in pairs] == [("t1", "c1")]
    # A threshold above the cross score keeps only the perfect pairs.
    strict = match_inventors(
        corpus,
        cohort,
        firm_matches,
        threshold=0.99,
        excluded_inventors=frozenset({"t1", "t2", "f1"}),
    )
    assert [(p.treated_inventor_id, p.control_inventor_id) for p in strict] == [
        ("t1", "c1"),
        ("t2", "c2"),
    ]


def test_match_inventors_empty_when_no_firm_match(study):
    corpus, cohort = _cohort(study)
    pairs = match_inventors(corpus, cohort, [], excluded_inventors=frozenset())
    assert pairs == []


# ---------------------------------------------------------------- reporting

def test_balance_table_shape(study):
    corpus, deal = study
    from patentdid.pipeline import run_matching

    out = run_matching(corpus, [deal])
    table = balance_table(corpus, out.cohorts_by_deal, out.pairs)
    assert list(table.index) == ["age", "patents", "exclusivity", "deal_year"]
    assert ("treated", "mean") in table.columns
    assert ("control", "sd") in table.columns
    # The mirrored control careers give identical means.
    assert table.loc["age", ("treated", "mean")] == table.loc["age", ("control", "mean")]
    assert table.loc["deal_year", ("treated", "n")] == 2


def test_propensity_overlap_histograms():
    # The probit inside needs covariate variation, so use a generated
    # corpus instead of the two-pair hand fixture.
    from patentdid.pipeline import run_matching
    from patentdid.synth import SynthConfig, generate

    result = generate(SynthConfig(seed=3, n_treated_firms=8))
    corpus = result.corpus()
    out = run_matching(corpus, result.deals)
    overlap = propensity_overlap(corpus, out.cohorts_by_deal, out.pairs)
    widths = np.diff(overlap.bin_edges)
    for density, scores in (
        (overlap.treated_density, overlap.treated_scores),
        (overlap.control_density, overlap.control_scores),
    ):
        assert (density >= 0).all()
        assert float(density @ widths) == pytest.approx(1.0, abs=1e-9)
        assert ((scores >= 0) & (scores <= 1)).all()
    assert 0.0 <= overlap.treated_mean <= 1.0
    assert 0.0 <= overlap.control_mean <= 1.0
