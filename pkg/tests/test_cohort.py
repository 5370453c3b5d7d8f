"""Study windows, employee attribution, cohort eligibility audits."""
from __future__ import annotations

import pytest

from patentdid.cohort import (
    EMPLOYEE,
    FREELANCER_DROPPED,
    attribute_employees,
    build_cohorts,
    make_window,
)
from patentdid.corpus import Corpus, DealEvent
from patentdid.errors import ValidationError

from conftest import mini_deal, mini_study_records, record


# ---------------------------------------------------------------- windows

def test_make_window_phases():
    w = make_window(2000)
    assert w.recruitment == (1993, 1996)
    assert w.before == (1996, 2000)
    assert w.after == (2000, 2004)
    assert w.full == (1993, 2004)


def test_window_phase_of_boundaries():
    w = make_window(2000, recruit_years=7, before_years=4, after_years=4)
    assert w.phase_of(1992) == "outside"
    assert w.phase_of(1993) == "recruitment"
    assert w.phase_of(1995) == "recruitment"
    assert w.phase_of(1996) == "before"
    assert w.phase_of(1999) == "before"
    assert w.phase_of(2000) == "after"
    assert w.phase_of(2003) == "after"
    assert w.phase_of(2004) == "outside"


def test_make_window_rejects_degenerate_shapes():
    with pytest.raises(ValidationError):
        make_window(2000, recruit_years=4, before_years=4)
    with pytest.raises(ValidationError):
        make_window(2000, recruit_years=7, before_years=0)
    with pytest.raises(ValidationError):
        make_window(2000, after_years=0)


# ---------------------------------------------------------------- employees

def _one_firm_corpus(rows):
    return Corpus([record(*r[:5]) for r in rows], span=(1980, 2010))


def test_attribute_employees_share_rule():
    # Share strictly above one third, or every filing focal.
    corpus = _one_firm_corpus(
        [
            # i_all: 3 of 3 focal.
            ("P1", 1993, "F", "i_all", "A01B001"),
            ("P2", 1994, "F", "i_all", "A01B001"),
            ("P3", 1995, "F", "i_all", "A01B001"),
            # i_third: exactly 1 of 3 focal, dropped (3*1 > 3 is false).
            ("P4", 1993, "F", "i_third", "A01B001"),
            ("P5", 1994, "G", "i_third", "A01B001"),
            ("P6", 1995, "G", "i_third", "A01B001"),
            # i_major: 3 of 8 focal, kept (3*3 > 8).
            ("P7", 1993, "F", "i_major", "A01B001"),
            ("P8", 1993, "F", "i_major", "A01B002"),
            ("P9", 1994, "F", "i_major", "A01B001"),
            ("PA", 1993, "G", "i_major", "A01B001"),
            ("PB", 1993, "G", "i_major", "A01B002"),
            ("PC", 1994, "G", "i_major", "A01B001"),
            ("PD", 1994, "G", "i_major", "A01B002"),
            ("PE", 1995, "G", "i_major", "A01B001"),
            # i_sole: single focal filing, kept (1 of 1).
            ("PF", 1995, "F", "i_sole", "A01B001"),
        ]
    )
    window = make_window(2000)
    attributions = {a.inventor_id: a for a in attribute_employees(corpus, "F", window)}
    assert attributions["i_all"].status == EMPLOYEE
    assert attributions["i_all"].share == 1.0
    assert attributions["i_third"].status == FREELANCER_DROPPED
    assert attributions["i_third"].share == pytest.approx(1 / 3)
    assert attributions["i_major"].status == EMPLOYEE
    assert attributions["i_major"].share == pytest.approx(3 / 8)
    assert attributions["i_sole"].status == EMPLOYEE


def test_attribute_employees_requires_recruitment_filings():
    corpus = _one_firm_corpus([("P1", 1999, "F", "i1", "A01B001")])
    with pytest.raises(ValidationError):
        attribute_employees(corpus, "F", make_window(2000))
    with pytest.raises(ValidationError):
        attribute_employees(corpus, "ABSENT", make_window(2000))


# ---------------------------------------------------------------- cohorts

def test_build_cohorts_mini_study(study):
    corpus, deal = study
    result = build_cohorts([deal], corpus)
    assert len(result.cohorts) == 1
    cohort = result.cohorts[0]
    assert cohort.deal_id == "T@2000"
    assert cohort.treated_firm_id == "T"
    assert cohort.employee_ids == ("t1", "t2")
    assert sorted(cohort.freelancers) == ["f1"]
    # Z shares no IPC main group with T's recruitment filings; ACQ and T
    # are deal involved; D and L have no overlapping support.
    assert cohort.control_candidates == ("C", "X", "Y")
    audit = result.audits[0]
    assert audit.verdict == "eligible"
    assert audit.reason == ""
    assert audit.n_employees == 2
    assert audit.n_freelancers == 1
    assert audit.n_candidates == 3


def test_build_cohorts_audit_reasons(study):
    corpus, deal = study
    other = DealEvent("C", "Cobalt", "ACQ", "Acme Holdings", 2000, "other_ma")
    unmatched = DealEvent("GHOST", "Ghost", "ACQ", "Acme Holdings", 2000, "acquisition")
    late = DealEvent("T", "Tern Laboratories", "ACQ", "Acme Holdings", 2000, "acquisition")
    result = build_cohorts([deal, other, unmatched], corpus)
    reasons = {a.deal_id: (a.verdict, a.reason) for a in result.audits}
    assert reasons["C@2000"] == ("excluded", "deal type other_ma")
    assert reasons["GHOST@2000"] == ("excluded", "acquired firm unmatched in corpus")
    spanned = build_cohorts([late], corpus, deal_span=(2005, 2009))
    assert spanned.audits[0].reason == "outside acquisition span"
    assert spanned.cohorts == []


def test_build_cohorts_no_recruitment_and_no_employees():
    records = [
        record("P1", 1999, "F", "i1", "A01B001"),
        # Freelancer only: 1 focal of 3 total in the window.
        record("P2", 1993, "G", "i2", "A01B001"),
        record("P3", 1994, "H", "i2", "A01B001"),
        record("P4", 1995, "H", "i2", "A01B001"),
        record("P5", 2001, "H", "i2", "A01B001"),
    ]
    corpus = Corpus(records, span=(1980, 2010))
    deal_f = DealEvent("F", "Firm F", "B", "Buyer", 2000, "acquisition")
    deal_g = DealEvent("G", "Firm G", "B", "Buyer", 2000, "acquisition")
    result = build_cohorts([deal_f, deal_g], corpus)
    reasons = {a.deal_id: a.reason for a in result.audits}
    assert reasons["F@2000"] == "no patents in recruitment window"
    assert reasons["G@2000"] == "no attributed employees"


def test_build_cohorts_requires_post_event_activity():
    records = [
        record("P1", 1993, "F", "i1", "A01B001"),
        record("P2", 1994, "F", "i1", "A01B001"),
    ]
    corpus = Corpus(records, span=(1980, 2010))
    deal = DealEvent("F", "Firm F", "B", "Buyer", 2000, "acquisition")
    result = build_cohorts([deal], corpus)
    assert result.audits[0].reason == "no employee active after event"


def test_build_cohorts_drops_inventor_shared_by_overlapping_treated_firms():
    records = [
        record("P1", 1993, "F", "dual", "A01B001"),
        record("P2", 1994, "F", "dual", "A01B001"),
        record("P3", 1994, "G", "dual", "A01B001"),
        record("P4", 1995, "G", "dual", "A01B001"),
        record("P5", 2001, "F", "dual", "A01B001"),
        # Keep both firms eligible via a second, clean employee each.
        record("P6", 1993, "F", "fo", "A01B001"),
        record("P7", 2001, "F", "fo", "A01B001"),
        record("P8", 1994, "G", "go", "A01B001"),
        record("P9", 2002, "G", "go", "A01B001"),
    ]
    corpus = Corpus(records, span=(1980, 2010))
    deals = [
        DealEvent("F", "Firm F", "B1", "Buyer One", 2000, "acquisition"),
        DealEvent("G", "Firm G", "B2", "Buyer Two", 2001, "acquisition"),
    ]
    with pytest.warns(UserWarning, match="multiple treated firms"):
        result = build_cohorts(deals, corpus)
    by_id = {c.deal_id: c for c in result.cohorts}
    assert "dual" not in by_id["F@2000"].employee_ids
    assert "dual" not in by_id["G@2001"].employee_ids
    assert by_id["F@2000"].employee_ids == ("fo",)
    assert by_id["G@2001"].employee_ids == ("go",)


def test_build_cohorts_audits_sorted_by_year_then_deal():
    corpus = Corpus([record("P1", 1994, "F", "i1", "A01B001")], span=(1980, 2010))
    deals = [
        DealEvent("ZZ", "Zeta", "B", "Buyer", 2000, "acquisition"),
        DealEvent("AA", "Alpha", "B", "Buyer", 2001, "acquisition"),
        DealEvent("MM", "Mu", "B", "Buyer", 2000, "acquisition"),
    ]
    result = build_cohorts(deals, corpus)
    assert [a.deal_id for a in result.audits] == ["MM@2000", "ZZ@2000", "AA@2001"]
