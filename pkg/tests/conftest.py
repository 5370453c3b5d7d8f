"""Shared fixtures: a small handcrafted acquisition study.

The mini study has one acquisition (firm T bought by ACQ in 2000), one
close control firm C that mirrors T's recruitment-window careers, two
rejectable control candidates, one freelancer, and enough filings to
exercise every pipeline stage with values that can be checked by hand.
"""
from __future__ import annotations

import pytest

from patentdid.corpus import Corpus, DealEvent, PatentRecord


def record(
    pid,
    year,
    firm,
    inventor,
    codes,
    name=None,
    lat=None,
    lon=None,
):
    return PatentRecord(
        patent_id=pid,
        application_year=year,
        assignee_id=firm,
        assignee_name=name if name is not None else f"{firm} Labs",
        inventors=(inventor,) if isinstance(inventor, str) else tuple(inventor),
        ipc_main_groups=(codes,) if isinstance(codes, str) else tuple(codes),
        latitude=lat,
        longitude=lon,
    )


def mini_study_records():
    # Recruitment window for the 2000 deal is [1993, 1996), before
    # [1996, 2000), after [2000, 2004).
    return [
        # Acquirer staff; profile used by dosage scoring.
        record("PA1", 1993, "ACQ", "a1", "C03D005", name="Acme Holdings"),
        record("PA2", 1994, "ACQ", "a1", "C03D005", name="Acme Holdings"),
        # Treated inventor t1: fully exclusive, stays after the deal.
        record("PT1", 1993, "T", "t1", "A01B001", lat=10.0, lon=20.0),
        record("PT2", 1994, "T", "t1", "A01B001", lat=10.0, lon=20.1),
        record("PT3", 1995, "T", "t1", ("A01B002", "C03D005"), lat=10.1, lon=20.0),
        record("PT4", 1997, "T", "t1", "A01B001", lat=10.0, lon=20.05),
        record("PT5", 2001, "T", "t1", "A01B001", lat=10.0, lon=20.0),
        # Treated inventor t2: one outside filing, leaves to firm D after.
        record("PT6", 1993, "T", "t2", "A01B001", lat=30.0, lon=40.0),
        record("PT7", 1994, "T", "t2", "A01B002", lat=30.0, lon=40.0),
        record("PX1", 1995, "X", "t2", "A01B001", lat=30.0, lon=40.0),
        record("PT8", 1996, "T", "t2", "A01B001", lat=30.0, lon=40.0),
        record("PD1", 2002, "D", "t2", "A01B001", lat=31.0, lon=40.0),
        # Freelancer f1: one focal filing out of four.
        record("PT9", 1994, "T", "f1", "A01B001"),
        record("PL1", 1993, "L", "f1", "G07H003"),
        record("PL2", 1994, "L", "f1", "G07H003"),
        record("PL3", 1995, "L", "f1", "G07H003"),
        # Control firm C mirrors t1/t2 careers inside the recruitment window.
        record("PC1", 1993, "C", "c1", "A01B001", lat=50.0, lon=60.0),
        record("PC2", 1994, "C", "c1", "A01B001", lat=50.0, lon=60.0),
        record("PC3", 1995, "C", "c1", ("A01B002", "C03D005"), lat=50.0, lon=60.0),
        record("PC4", 1998, "C", "c1", "A01B001", lat=50.0, lon=60.0),
        record("PC5", 2000, "C", "c1", "A01B001", lat=50.0, lon=60.0),
        record("PC6", 1993, "C", "c2", "A01B001", lat=70.0, lon=80.0),
        record("PC7", 1994, "C", "c2", "A01B002", lat=70.0, lon=80.0),
        record("PY1", 1995, "Y", "c2", "A01B001", lat=70.0, lon=80.0),
        record("PC8", 1997, "C", "c2", "A01B001", lat=70.0, lon=80.0),
        # Z shares no IPC main group with T, so it is never a candidate.
        record("PZ1", 1994, "Z", "z1", "E05F009"),
    ]


def mini_deal():
    return DealEvent(
        acquired_id="T",
        acquired_name="Tern Laboratories",
        acquirer_id="ACQ",
        acquirer_name="Acme Holdings",
        deal_year=2000,
        deal_type="acquisition",
    )


@pytest.fixture
def study():
    corpus = Corpus(mini_study_records(), span=(1990, 2010))
    return corpus, mini_deal()
