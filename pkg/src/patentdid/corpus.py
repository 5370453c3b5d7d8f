"""Patent corpus loading, firm-name resolution, and alias handling.

The on-disk patent table has one row per (patent, inventor); loading
groups rows into one record per patent and validates every field.
Assignee names are messy in real filings, so the module also carries the
string machinery used to tie post-event filings back to a focal firm:
canonical name normalization, Levenshtein distance, and a reviewable
alias queue.
"""
from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field, replace

from .errors import ValidationError

# Tail tokens treated as legal-form suffixes, not name content.
LEGAL_SUFFIXES = frozenset(
    {"inc", "corp", "ltd", "co", "llc", "plc", "ag", "gmbh", "sa"}
)

# Section letter, two-digit class, subclass letter, zero-padded main group.
IPC_MAIN_GROUP_RE = re.compile(r"^[A-H][0-9]{2}[A-Z][0-9]{3}$")

_PUNCT_RE = re.compile(r"[^\w\s]|_")
_WS_RE = re.compile(r"\s+")

PATENT_HEADER = [
    "patent_id",
    "application_year",
    "assignee_id",
    "assignee_name",
    "inventor_id",
    "ipc_main_groups",
    "latitude",
    "longitude",
]

DEAL_HEADER = [
    "acquired_id",
    "acquired_name",
    "acquirer_id",
    "acquirer_name",
    "deal_year",
    "deal_type",
]

DEAL_TYPES = frozenset({"acquisition", "other_ma"})

ALIAS_REVIEW_HEADER = ["focal_firm_id", "candidate_assignee_id", "decision"]


def fold_name(name: str) -> str:
    """Case/punctuation folding without legal-suffix removal.

    This is the form alias scoring compares on: lowercase, punctuation
    stripped, whitespace collapsed. Suffix words stay put so that
    "Boston Scientific Corp" and "Boston Scientific" score as near but
    not equal and land in the review queue rather than merging silently.
    """
    s = _PUNCT_RE.sub("", name.lower())
    return _WS_RE.sub(" ", s).strip()


def normalize_name(name: str) -> str:
    """Canonical firm name: folded, with legal suffixes removed from the tail.

    Idempotent: normalize(normalize(x)) == normalize(x).

    >>> normalize_name("Boston Scientific Corp.")
    'boston scientific'
    """
    tokens = fold_name(name).split()
    while tokens and tokens[-1] in LEGAL_SUFFIXES:
        tokens.pop()
    return " ".join(tokens)


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def _levenshtein_within(a: str, b: str, limit: int) -> int:
    """Banded edit distance; returns limit + 1 as soon as it is exceeded.

    Used by the alias scan, where most comparisons are far apart and the
    full DP would dominate ingest time.
    """
    if abs(len(a) - len(b)) > limit:
        return limit + 1
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    big = limit + 1
    previous = [j if j <= limit else big for j in range(len(b) + 1)]
    for i, ca in enumerate(a, start=1):
        current = [i if i <= limit else big]
        lo = max(1, i - limit)
        hi = min(len(b), i + limit)
        for j in range(1, len(b) + 1):
            if j < lo or j > hi:
                current.append(big)
                continue
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != b[j - 1]),
                )
            )
        previous = current
        if min(previous) > limit:
            return big
    return min(previous[-1], big)


def name_similarity(a: str, b: str) -> float:
    """1 - levenshtein(fold(a), fold(b)) / max length of the folded forms.

    Two empty folded names compare equal (similarity 1.0).
    """
    fa, fb = fold_name(a), fold_name(b)
    longest = max(len(fa), len(fb))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(fa, fb) / longest


@dataclass(frozen=True)
class PatentRecord:
    patent_id: str
    application_year: int
    assignee_id: str
    assignee_name: str
    inventors: tuple[str, ...]
    ipc_main_groups: tuple[str, ...]
    latitude: float | None = None
    longitude: float | None = None

    @property
    def located(self) -> bool:
        return self.latitude is not None


@dataclass(frozen=True)
class DealEvent:
    acquired_id: str
    acquired_name: str
    acquirer_id: str
    acquirer_name: str
    deal_year: int
    deal_type: str

    @property
    def deal_id(self) -> str:
        return f"{self.acquired_id}@{self.deal_year}"


@dataclass(frozen=True)
class AliasCandidate:
    assignee_id: str
    assignee_name: str
    score: float
    target: str  # "acquired" or "acquirer"


@dataclass
class AliasSet:
    """Assignee ids treated as the focal (acquired) firm after the event."""

    focal_firm_id: str
    confirmed: set[str] = field(default_factory=set)
    review_queue: list[AliasCandidate] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.confirmed.add(self.focal_firm_id)


class Corpus:
    """Validated patent records plus the lookup indices every stage needs."""

    def __init__(self, records: list[PatentRecord], span: tuple[int, int]):
        self.records = sorted(records, key=lambda r: r.patent_id)
        self.span = span
        self._by_firm: dict[str, list[PatentRecord]] = {}
        self._by_inventor: dict[str, list[PatentRecord]] = {}
        self.assignee_names: dict[str, str] = {}
        for rec in self.records:
            self._by_firm.setdefault(rec.assignee_id, []).append(rec)
            self.assignee_names.setdefault(rec.assignee_id, rec.assignee_name)
            for inv in rec.inventors:
                self._by_inventor.setdefault(inv, []).append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def firms(self) -> list[str]:
        return sorted(self._by_firm)

    def inventors(self) -> list[str]:
        return sorted(self._by_inventor)

    def has_firm(self, firm_id: str) -> bool:
        return firm_id in self._by_firm

    def firm_patents(
        self, firm_id: str, interval: tuple[int, int] | None = None
    ) -> list[PatentRecord]:
        return _in_interval(self._by_firm.get(firm_id, []), interval)

    def inventor_patents(
        self, inventor_id: str, interval: tuple[int, int] | None = None
    ) -> list[PatentRecord]:
        return _in_interval(self._by_inventor.get(inventor_id, []), interval)

    def first_year_of_firm(self, firm_id: str) -> int:
        patents = self._by_firm.get(firm_id)
        if not patents:
            raise ValidationError(f"firm {firm_id!r} has no patents in the corpus")
        return min(p.application_year for p in patents)

    def first_year_of_inventor(self, inventor_id: str) -> int:
        patents = self._by_inventor.get(inventor_id)
        if not patents:
            raise ValidationError(
                f"inventor {inventor_id!r} has no patents in the corpus"
            )
        return min(p.application_year for p in patents)

    def first_year_with_firm(self, inventor_id: str, firm_id: str) -> int:
        years = [
            p.application_year
            for p in self._by_inventor.get(inventor_id, [])
            if p.assignee_id == firm_id
        ]
        if not years:
            raise ValidationError(
                f"inventor {inventor_id!r} never filed for firm {firm_id!r}"
            )
        return min(years)


def _in_interval(
    patents: list[PatentRecord], interval: tuple[int, int] | None
) -> list[PatentRecord]:
    if interval is None:
        return list(patents)
    lo, hi = interval
    return [p for p in patents if lo <= p.application_year < hi]


@dataclass
class PatentLoadReport:
    path: str
    rows_read: int = 0
    n_records: int = 0
    rejected_out_of_span: int = 0
    collapsed_duplicates: int = 0


def _parse_coordinates(
    lat_text: str, lon_text: str, where: str
) -> tuple[float | None, float | None]:
    if lat_text == "" and lon_text == "":
        return None, None
    if lat_text == "" or lon_text == "":
        raise ValidationError(
            f"{where}: fields 'latitude'/'longitude' must both be present or both empty"
        )
    try:
        lat = float(lat_text)
    except ValueError:
        raise ValidationError(f"{where}: field 'latitude' is not a number") from None
    try:
        lon = float(lon_text)
    except ValueError:
        raise ValidationError(f"{where}: field 'longitude' is not a number") from None
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"{where}: field 'latitude' out of range [-90, 90]")
    if not -180.0 < lon <= 180.0:
        raise ValidationError(f"{where}: field 'longitude' out of range (-180, 180]")
    return lat, lon


def load_patents(path: str, span: tuple[int, int]) -> tuple[Corpus, PatentLoadReport]:
    """Read the one-row-per-(patent, inventor) table into patent records.

    Rows with application_year outside `span` (inclusive bounds) are
    rejected and counted, not fatal. Malformed rows and conflicting
    metadata for a repeated patent_id raise ValidationError naming the
    offending line and field.
    """
    lo, hi = span
    if lo > hi:
        raise ValidationError(f"corpus span {span} has start after end")
    report = PatentLoadReport(path=str(path))
    grouped: dict[str, dict] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PATENT_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(PATENT_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(PATENT_HEADER):
                raise ValidationError(
                    f"{where}: expected {len(PATENT_HEADER)} fields, got {len(row)}"
                )
            report.rows_read += 1
            pid, year_text, aid, aname, inv, ipc_text, lat_text, lon_text = (
                cell.strip() for cell in row
            )
            for name, value in (
                ("patent_id", pid),
                ("application_year", year_text),
                ("assignee_id", aid),
                ("assignee_name", aname),
                ("inventor_id", inv),
                ("ipc_main_groups", ipc_text),
            ):
                if value == "":
                    raise ValidationError(f"{where}: field '{name}' is empty")
            try:
                year = int(year_text)
            except ValueError:
                raise ValidationError(
                    f"{where}: field 'application_year' is not an integer"
                ) from None
            codes = tuple(sorted({c.strip() for c in ipc_text.split(";") if c.strip()}))
            if not codes:
                raise ValidationError(f"{where}: field 'ipc_main_groups' is empty")
            for code in codes:
                if not IPC_MAIN_GROUP_RE.match(code):
                    raise ValidationError(
                        f"{where}: field 'ipc_main_groups' has malformed code {code!r}"
                    )
            lat, lon = _parse_coordinates(lat_text, lon_text, where)
            if not lo <= year <= hi:
                report.rejected_out_of_span += 1
                continue
            meta = (year, aid, aname, codes, lat, lon)
            entry = grouped.get(pid)
            if entry is None:
                grouped[pid] = {"meta": meta, "inventors": {inv}, "line": lineno}
                continue
            if entry["meta"] != meta:
                raise ValidationError(
                    f"{where}: duplicate patent_id {pid!r} conflicts with line "
                    f"{entry['line']}"
                )
            if inv in entry["inventors"]:
                report.collapsed_duplicates += 1
            else:
                entry["inventors"].add(inv)

    records = []
    for pid, entry in grouped.items():
        year, aid, aname, codes, lat, lon = entry["meta"]
        records.append(
            PatentRecord(
                patent_id=pid,
                application_year=year,
                assignee_id=aid,
                assignee_name=aname,
                inventors=tuple(sorted(entry["inventors"])),
                ipc_main_groups=codes,
                latitude=lat,
                longitude=lon,
            )
        )
    if report.collapsed_duplicates:
        warnings.warn(
            f"{path}: collapsed {report.collapsed_duplicates} duplicate "
            "(patent_id, inventor_id) rows"
        )
    report.n_records = len(records)
    return Corpus(records, span), report


def write_patents(records, path: str) -> None:
    """Inverse of load_patents: one row per (patent, inventor), sorted."""
    records = sorted(records, key=lambda r: r.patent_id)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PATENT_HEADER)
        for rec in records:
            lat = "" if rec.latitude is None else repr(rec.latitude)
            lon = "" if rec.longitude is None else repr(rec.longitude)
            for inv in rec.inventors:
                writer.writerow(
                    [
                        rec.patent_id,
                        rec.application_year,
                        rec.assignee_id,
                        rec.assignee_name,
                        inv,
                        ";".join(rec.ipc_main_groups),
                        lat,
                        lon,
                    ]
                )


def load_deals(path: str) -> list[DealEvent]:
    """Read the deal table; sorted by (deal_year, acquired_id)."""
    deals = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DEAL_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(DEAL_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(DEAL_HEADER):
                raise ValidationError(
                    f"{where}: expected {len(DEAL_HEADER)} fields, got {len(row)}"
                )
            acquired_id, acquired_name, acquirer_id, acquirer_name, year_text, dtype = (
                cell.strip() for cell in row
            )
            for name, value in zip(DEAL_HEADER, row):
                if value.strip() == "":
                    raise ValidationError(f"{where}: field '{name}' is empty")
            try:
                deal_year = int(year_text)
            except ValueError:
                raise ValidationError(
                    f"{where}: field 'deal_year' is not an integer"
                ) from None
            if dtype not in DEAL_TYPES:
                raise ValidationError(
                    f"{where}: field 'deal_type' must be one of "
                    f"{sorted(DEAL_TYPES)}, got {dtype!r}"
                )
            if acquired_id == acquirer_id:
                raise ValidationError(
                    f"{where}: acquired_id equals acquirer_id ({acquired_id!r})"
                )
            deals.append(
                DealEvent(
                    acquired_id=acquired_id,
                    acquired_name=acquired_name,
                    acquirer_id=acquirer_id,
                    acquirer_name=acquirer_name,
                    deal_year=deal_year,
                    deal_type=dtype,
                )
            )
    return sorted(deals, key=lambda d: (d.deal_year, d.acquired_id))


def write_deals(deals, path: str) -> None:
    deals = sorted(deals, key=lambda d: (d.deal_year, d.acquired_id))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DEAL_HEADER)
        for d in deals:
            writer.writerow(
                [
                    d.acquired_id,
                    d.acquired_name,
                    d.acquirer_id,
                    d.acquirer_name,
                    d.deal_year,
                    d.deal_type,
                ]
            )


def resolve_aliases(
    deal: DealEvent,
    assignees,
    threshold: float = 0.7,
) -> AliasSet:
    """Score every assignee name against the deal's firm names.

    Exact folded-name matches to the acquired or acquirer name are
    auto-confirmed; names at or above `threshold` similarity are queued
    for manual review. The focal (acquired) firm id is always confirmed.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"alias threshold must be in (0, 1], got {threshold}")
    alias_set = AliasSet(focal_firm_id=deal.acquired_id)
    targets = [
        ("acquired", fold_name(deal.acquired_name)),
        ("acquirer", fold_name(deal.acquirer_name)),
    ]
    queue = []
    for assignee_id, assignee_name in sorted(assignees):
        if assignee_id == deal.acquired_id or assignee_id == deal.acquirer_id:
            alias_set.confirmed.add(assignee_id)
            continue
        folded = fold_name(assignee_name)
        best_score, best_target = 0.0, ""
        for target, target_folded in targets:
            if folded == target_folded:
                best_score, best_target = 1.0, target
                break
            longest = max(len(folded), len(target_folded))
            if longest == 0:
                continue
            # similarity >= threshold requires distance <= (1 - threshold) * longest
            limit = int((1.0 - threshold) * longest)
            dist = _levenshtein_within(folded, target_folded, limit)
            score = 1.0 - dist / longest
            if score > best_score:
                best_score, best_target = score, target
        if best_score == 1.0:
            alias_set.confirmed.add(assignee_id)
        elif best_score >= threshold:
            queue.append(
                AliasCandidate(assignee_id, assignee_name, best_score, best_target)
            )
    alias_set.review_queue = sorted(queue, key=lambda c: (-c.score, c.assignee_id))
    return alias_set


def load_alias_review(path: str) -> list[tuple[str, str, str]]:
    """Read (focal_firm_id, candidate_assignee_id, decision) triples."""
    decisions = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ALIAS_REVIEW_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(ALIAS_REVIEW_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 fields")
            focal, candidate, decision = (cell.strip() for cell in row)
            if decision not in ("confirm", "reject"):
                raise ValidationError(
                    f"{path}:{lineno}: decision must be 'confirm' or 'reject', "
                    f"got {decision!r}"
                )
            decisions.append((focal, candidate, decision))
    return decisions


def merge_assignee_ids(records, mapping: dict[str, str]) -> list[PatentRecord]:
    """Rewrite assignee ids through an alias mapping (alias -> canonical)."""
    merged = []
    for rec in records:
        canonical = mapping.get(rec.assignee_id)
        if canonical is None:
            merged.append(rec)
        else:
            merged.append(replace(rec, assignee_id=canonical))
    return merged


def apply_alias_review(alias_set: AliasSet, decisions) -> AliasSet:
    """Apply confirm/reject decisions to a review queue.

    Decisions for other focal firms are ignored; a decision naming a
    candidate that is neither queued nor already confirmed is an error
    (it usually means a typo in the review file).
    """
    queued = {c.assignee_id: c for c in alias_set.review_queue}
    confirmed = set(alias_set.confirmed)
    for focal, candidate, decision in decisions:
        if focal != alias_set.focal_firm_id:
            continue
        if candidate in queued:
            if decision == "confirm":
                confirmed.add(candidate)
            del queued[candidate]
        elif candidate in confirmed:
            if decision == "reject":
                raise ValidationError(
                    f"cannot reject {candidate!r}: already confirmed for "
                    f"{alias_set.focal_firm_id!r}"
                )
        else:
            raise ValidationError(
                f"review decision for unknown candidate {candidate!r} "
                f"(focal firm {alias_set.focal_firm_id!r})"
            )
    result = AliasSet(focal_firm_id=alias_set.focal_firm_id, confirmed=confirmed)
    result.review_queue = sorted(
        queued.values(), key=lambda c: (-c.score, c.assignee_id)
    )
    return result
