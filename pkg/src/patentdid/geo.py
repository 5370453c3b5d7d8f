"""Relocation diagnostics from patent-filing coordinates.

Each inventor-phase gets a representative location: the observed filing
point closest to the phase barycenter. Relocation is the great-circle
distance between the before and after representatives, so it is always
anchored to places the inventor actually filed from.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import pandas as pd

from .corpus import Corpus
from .errors import ValidationError

EARTH_RADIUS_KM = 6371.0
NEARBY_KM = 10.0


@dataclass(frozen=True)
class LocatedFiling:
    patent_id: str
    year: int
    latitude: float
    longitude: float

    @property
    def point(self) -> tuple[float, float]:
        return (self.latitude, self.longitude)


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in kilometres between (lat, lon) pairs."""
    lat1, lon1 = (math.radians(v) for v in a)
    lat2, lon2 = (math.radians(v) for v in b)
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def barycenter(points: list[tuple[float, float]]) -> tuple[float, float]:
    """Coordinate-wise mean. Adequate at the city-to-region scale the
    filings live at; a cluster straddling the antimeridian would need a
    spherical mean instead, so that case warns."""
    if not points:
        raise ValidationError("barycenter of zero points is undefined")
    lons = [lon for _, lon in points]
    if max(lons) - min(lons) > 180.0:
        warnings.warn(
            "longitude span exceeds 180 degrees; planar barycenter is unreliable"
        )
    lat = sum(lat for lat, _ in points) / len(points)
    lon = sum(lons) / len(points)
    return (lat, lon)


def located_filings(
    corpus: Corpus, inventor_id: str, interval: tuple[int, int]
) -> list[LocatedFiling]:
    """The inventor's geocoded filings in the interval, oldest first."""
    filings = [
        LocatedFiling(p.patent_id, p.application_year, p.latitude, p.longitude)
        for p in corpus.inventor_patents(inventor_id, interval)
        if p.located
    ]
    filings.sort(key=lambda f: (f.year, f.patent_id))
    return filings


def representative_location(filings: list[LocatedFiling]) -> LocatedFiling:
    """Observed filing closest to the barycenter; ties go to the earliest
    year, then the smallest patent id."""
    if not filings:
        raise ValidationError("no located filings to summarize")
    center = barycenter([f.point for f in filings])
    return min(
        filings, key=lambda f: (haversine_km(f.point, center), f.year, f.patent_id)
    )


def standard_distance_km(filings: list[LocatedFiling]) -> float:
    """Root-mean-square distance to the barycenter (spatial dispersion)."""
    if not filings:
        raise ValidationError("no located filings to summarize")
    center = barycenter([f.point for f in filings])
    return math.sqrt(
        sum(haversine_km(f.point, center) ** 2 for f in filings) / len(filings)
    )


def relocation_table(corpus: Corpus, cohorts_by_deal, pairs, observations):
    """Per-inventor relocation rows for everyone observable in both phases.

    Inventors missing located filings in either phase are skipped; the
    `skipped` count comes back alongside the table. stay is taken from
    the after-period panel row so grouping matches the regressions.
    """
    after_rows = {
        (obs.pair_id, obs.inventor_id): obs
        for obs in observations
        if obs.period == 1
    }
    rows = []
    skipped = 0
    for pair in pairs:
        cohort = cohorts_by_deal[pair.deal_id]
        window = cohort.window
        for acquired, inventor in (
            (1, pair.treated_inventor_id),
            (0, pair.control_inventor_id),
        ):
            before = located_filings(corpus, inventor, window.before)
            after = located_filings(corpus, inventor, window.after)
            if not before or not after:
                skipped += 1
                continue
            rep_before = representative_location(before)
            rep_after = representative_location(after)
            panel_row = after_rows.get((pair.pair_id, inventor))
            stay = panel_row.stay if panel_row is not None else None
            rows.append(
                {
                    "pair_id": pair.pair_id,
                    "inventor_id": inventor,
                    "acquired": acquired,
                    "stay": float("nan") if stay is None else float(stay),
                    "before_latitude": rep_before.latitude,
                    "before_longitude": rep_before.longitude,
                    "after_latitude": rep_after.latitude,
                    "after_longitude": rep_after.longitude,
                    "relocation_km": haversine_km(rep_before.point, rep_after.point),
                    "before_spread_km": standard_distance_km(before),
                    "after_spread_km": standard_distance_km(after),
                }
            )
    table = pd.DataFrame(
        rows,
        columns=[
            "pair_id",
            "inventor_id",
            "acquired",
            "stay",
            "before_latitude",
            "before_longitude",
            "after_latitude",
            "after_longitude",
            "relocation_km",
            "before_spread_km",
            "after_spread_km",
        ],
    )
    return table, skipped


def relocation_summary(table: pd.DataFrame) -> pd.DataFrame:
    """Relocation distance by acquired x stay cell, with the share of
    inventors who stayed within NEARBY_KM of their before location."""
    if len(table) == 0:
        raise ValidationError("relocation table is empty")
    usable = table.dropna(subset=["stay"]).copy()
    if len(usable) == 0:
        raise ValidationError("no relocation rows with an observed stay outcome")
    usable["stay"] = usable["stay"].astype(int)
    grouped = usable.groupby(["acquired", "stay"])["relocation_km"]
    summary = grouped.agg(
        n="count", mean_km="mean", median_km="median"
    ).reset_index()
    nearby = (
        usable.assign(nearby=usable["relocation_km"] <= NEARBY_KM)
        .groupby(["acquired", "stay"])["nearby"]
        .mean()
        .reset_index(name="share_within_10km")
    )
    return summary.merge(nearby, on=["acquired", "stay"])
