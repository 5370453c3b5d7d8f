"""Location utilities and the relocation diagnostic table."""
from __future__ import annotations

import math

import numpy as np
import pytest

from patentdid.corpus import Corpus
from patentdid.errors import ValidationError
from patentdid.geo import (
    EARTH_RADIUS_KM,
    NEARBY_KM,
    barycenter,
    haversine_km,
    located_filings,
    relocation_summary,
    relocation_table,
    representative_location,
    standard_distance_km,
)
from patentdid.pipeline import run_matching, run_panel

from conftest import record


def test_haversine_oracle_values():
    quarter = math.pi / 2 * EARTH_RADIUS_KM
    assert haversine_km((0.0, 0.0), (0.0, 90.0)) == pytest.approx(quarter, abs=0.01)
    assert haversine_km((0.0, 0.0), (0.0, 0.0)) == 0.0
    assert haversine_km((0.0, 0.0), (0.0, 180.0)) == pytest.approx(2 * quarter, abs=0.01)
    assert haversine_km((90.0, 0.0), (-90.0, 0.0)) == pytest.approx(2 * quarter, abs=0.01)
    # One degree of latitude.
    assert haversine_km((30.0, 40.0), (31.0, 40.0)) == pytest.approx(
        math.pi / 180 * EARTH_RADIUS_KM, abs=1e-6
    )


def test_haversine_symmetry_and_bounds():
    rng = np.random.default_rng(14)
    for _ in range(200):
        a = (float(rng.uniform(-90, 90)), float(rng.uniform(-179, 180)))
        b = (float(rng.uniform(-90, 90)), float(rng.uniform(-179, 180)))
        d = haversine_km(a, b)
        assert d == pytest.approx(haversine_km(b, a), abs=1e-9)
        assert 0.0 <= d <= math.pi * EARTH_RADIUS_KM + 1e-9


def test_barycenter_planar_mean_and_wrap_warning():
    assert barycenter([(10.0, 20.0), (30.0, 40.0)]) == (20.0, 30.0)
    with pytest.warns(UserWarning, match="180"):
        barycenter([(0.0, -179.0), (0.0, 179.0)])


def test_located_filings_sorted_and_filtered(study):
    corpus, _ = study
    filings = located_filings(corpus, "t1", (1993, 2004))
    assert [f.patent_id for f in filings] == ["PT1", "PT2", "PT3", "PT4", "PT5"]
    years = [f.year for f in filings]
    assert years == sorted(years)
    # f1's filings carry no coordinates.
    assert located_filings(corpus, "f1", (1993, 2004)) == []


def test_representative_location_prefers_center_then_year():
    corpus = Corpus(
        [
            record("P1", 1995, "F", "i", "A01B001", lat=0.0, lon=0.0),
            record("P2", 1993, "F", "i", "A01B001", lat=0.0, lon=10.0),
            record("P3", 1994, "F", "i", "A01B001", lat=0.0, lon=10.0),
        ],
        span=(1990, 2010),
    )
    filings = located_filings(corpus, "i", (1990, 2010))
    # Barycenter sits at lon 20/3; the two eastern filings tie on
    # distance and the earlier year wins.
    rep = representative_location(filings)
    assert rep.patent_id == "P2"


def test_standard_distance_is_rms_about_barycenter():
    corpus = Corpus(
        [
            record("P1", 1995, "F", "i", "A01B001", lat=0.0, lon=0.0),
            record("P2", 1996, "F", "i", "A01B001", lat=0.0, lon=2.0),
        ],
        span=(1990, 2010),
    )
    filings = located_filings(corpus, "i", (1990, 2010))
    radius = haversine_km((0.0, 0.0), (0.0, 1.0))
    assert standard_distance_km(filings) == pytest.approx(radius, rel=1e-9)
    assert standard_distance_km(filings[:1]) == 0.0


def test_relocation_table_mini_study(study):
    corpus, deal = study
    out = run_matching(corpus, [deal])
    observations = run_panel(corpus, out)
    table, skipped = relocation_table(corpus, out.cohorts_by_deal, out.pairs, observations)
    # c2 never files after the event, so it cannot be located.
    assert skipped == 1
    assert sorted(table["inventor_id"]) == ["c1", "t1", "t2"]
    t2 = table[table["inventor_id"] == "t2"].iloc[0]
    assert t2["relocation_km"] == pytest.approx(math.pi / 180 * EARTH_RADIUS_KM, abs=1e-6)
    assert t2["stay"] == 0.0
    t1 = table[table["inventor_id"] == "t1"].iloc[0]
    # Small longitude shift at latitude 10.
    expected = haversine_km((10.0, 20.05), (10.0, 20.0))
    assert t1["relocation_km"] == pytest.approx(expected, abs=1e-9)
    assert t1["relocation_km"] < NEARBY_KM
    c1 = table[table["inventor_id"] == "c1"].iloc[0]
    assert c1["relocation_km"] == 0.0
    assert (table["before_spread_km"] == 0.0).all()


def test_relocation_summary_groups(study):
    corpus, deal = study
    out = run_matching(corpus, [deal])
    observations = run_panel(corpus, out)
    table, _ = relocation_table(corpus, out.cohorts_by_deal, out.pairs, observations)
    summary = relocation_summary(table)
    rows = {(int(r["acquired"]), int(r["stay"])): r for _, r in summary.iterrows()}
    assert rows[(1, 0)]["mean_km"] == pytest.approx(math.pi / 180 * EARTH_RADIUS_KM, abs=1e-6)
    assert rows[(1, 0)]["share_within_10km"] == 0.0
    assert rows[(1, 1)]["share_within_10km"] == 1.0
    assert rows[(0, 1)]["n"] == 1
    with pytest.raises(ValidationError):
        relocation_summary(table.iloc[:0])
