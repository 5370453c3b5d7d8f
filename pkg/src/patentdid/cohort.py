"""Event-time windows, employment attribution, and treatment cohorts.

Each acquisition event defines three half-open phases around the deal
year t_E: recruitment [t_E - r, t_E - b), before [t_E - b, t_E), and
after [t_E, t_E + a). Employment is attributed from recruitment-phase
filing shares; an inventor filing more than a third of their
recruitment-phase patents for a firm counts as its employee, anyone at
or below that bar for a treated firm is a freelancer and is barred from
every downstream pool.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .corpus import Corpus, DealEvent
from .errors import ValidationError

EMPLOYEE = "employee"
FREELANCER_DROPPED = "freelancer_dropped"


@dataclass(frozen=True)
class StudyWindow:
    event_year: int
    recruit_years: int
    before_years: int
    after_years: int

    @property
    def recruitment(self) -> tuple[int, int]:
        return (
            self.event_year - self.recruit_years,
            self.event_year - self.before_years,
        )

    @property
    def before(self) -> tuple[int, int]:
        return (self.event_year - self.before_years, self.event_year)

    @property
    def after(self) -> tuple[int, int]:
        return (self.event_year, self.event_year + self.after_years)

    @property
    def full(self) -> tuple[int, int]:
        return (self.event_year - self.recruit_years, self.event_year + self.after_years)

    def phase_of(self, year: int) -> str:
        if self.recruitment[0] <= year < self.recruitment[1]:
            return "recruitment"
        if self.before[0] <= year < self.before[1]:
            return "before"
        if self.after[0] <= year < self.after[1]:
            return "after"
        return "outside"


def make_window(
    event_year: int, recruit_years: int = 7, before_years: int = 4, after_years: int = 4
) -> StudyWindow:
    """Build the phase geometry around an event year; requires r > b > 0, a > 0."""
    if not recruit_years > before_years > 0:
        raise ValidationError(
            f"window requires recruit_years > before_years > 0, got "
            f"r={recruit_years}, b={before_years}"
        )
    if after_years <= 0:
        raise ValidationError(f"window requires after_years > 0, got a={after_years}")
    return StudyWindow(event_year, recruit_years, before_years, after_years)


@dataclass(frozen=True)
class EmploymentAttribution:
    inventor_id: str
    firm_id: str
    focal_patents: int
    total_patents: int
    status: str

    @property
    def share(self) -> float:
        return self.focal_patents / self.total_patents


def attribute_employees(
    corpus: Corpus, firm_id: str, window: StudyWindow
) -> list[EmploymentAttribution]:
    """Classify every inventor with a recruitment-phase filing for the firm.

    Shares compare exact integer counts, so the boundary is crisp: an
    inventor is an employee iff all recruitment patents are focal or the
    focal count strictly exceeds one third of their total.
    """
    if not corpus.has_firm(firm_id):
        raise ValidationError(f"firm {firm_id!r} absent from corpus")
    recruitment = window.recruitment
    focal_patents = corpus.firm_patents(firm_id, recruitment)
    if not focal_patents:
        raise ValidationError(
            f"firm {firm_id!r} has no patents in recruitment window "
            f"[{recruitment[0]}, {recruitment[1]})"
        )
    inventor_ids = sorted({inv for p in focal_patents for inv in p.inventors})
    attributions = []
    for inv in inventor_ids:
        patents = corpus.inventor_patents(inv, recruitment)
        focal = sum(1 for p in patents if p.assignee_id == firm_id)
        total = len(patents)
        employee = focal == total or 3 * focal > total
        attributions.append(
            EmploymentAttribution(
                inventor_id=inv,
                firm_id=firm_id,
                focal_patents=focal,
                total_patents=total,
                status=EMPLOYEE if employee else FREELANCER_DROPPED,
            )
        )
    return attributions


@dataclass
class TreatmentCohort:
    deal: DealEvent
    window: StudyWindow
    employees: list[EmploymentAttribution]
    freelancers: tuple[str, ...]
    control_candidates: tuple[str, ...]

    @property
    def deal_id(self) -> str:
        return self.deal.deal_id

    @property
    def treated_firm_id(self) -> str:
        return self.deal.acquired_id

    @property
    def employee_ids(self) -> tuple[str, ...]:
        return tuple(a.inventor_id for a in self.employees)


@dataclass(frozen=True)
class CohortAudit:
    deal_id: str
    deal_year: int
    verdict: str  # "eligible" or "excluded"
    reason: str
    n_employees: int = 0
    n_freelancers: int = 0
    n_candidates: int = 0


@dataclass
class CohortBuildResult:
    cohorts: list[TreatmentCohort]
    audits: list[CohortAudit]
    treated_inventors: set[str] = field(default_factory=set)
    freelancer_inventors: set[str] = field(default_factory=set)


def _windows_overlap(a: StudyWindow, b: StudyWindow) -> bool:
    return a.full[0] < b.full[1] and b.full[0] < a.full[1]


def build_cohorts(
    deals,
    corpus: Corpus,
    *,
    recruit_years: int = 7,
    before_years: int = 4,
    after_years: int = 4,
    deal_span: tuple[int, int] | None = None,
) -> CohortBuildResult:
    """Turn acquisition deals into treatment cohorts with an audit trail.

    Every deal gets an audit row. Firms appearing in any deal (either
    side, any type) are barred from control candidacy. Control
    candidates must have at least one recruitment-phase patent sharing
    an IPC main group with the treated firm's recruitment profile.
    """
    deals = sorted(deals, key=lambda d: (d.deal_year, d.acquired_id))
    deal_involved = set()
    for d in deals:
        deal_involved.add(d.acquired_id)
        deal_involved.add(d.acquirer_id)

    result = CohortBuildResult(cohorts=[], audits=[])

    def audit(deal, verdict, reason, **counts):
        result.audits.append(
            CohortAudit(deal.deal_id, deal.deal_year, verdict, reason, **counts)
        )

    candidate_cache: dict[tuple[int, int], dict[str, set[str]]] = {}

    def recruitment_support(interval: tuple[int, int]) -> dict[str, set[str]]:
        # firm -> set of IPC main groups filed in this recruitment interval
        support = candidate_cache.get(interval)
        if support is None:
            support = {}
            for firm in corpus.firms():
                patents = corpus.firm_patents(firm, interval)
                if patents:
                    support[firm] = {c for p in patents for c in p.ipc_main_groups}
            candidate_cache[interval] = support
        return support

    for deal in deals:
        if deal.deal_type != "acquisition":
            audit(deal, "excluded", "deal type other_ma")
            continue
        if deal_span is not None and not deal_span[0] <= deal.deal_year <= deal_span[1]:
            audit(deal, "excluded", "outside acquisition span")
            continue
        window = make_window(deal.deal_year, recruit_years, before_years, after_years)
        if not corpus.has_firm(deal.acquired_id):
            audit(deal, "excluded", "acquired firm unmatched in corpus")
            continue
        if not corpus.firm_patents(deal.acquired_id, window.recruitment):
            audit(deal, "excluded", "no patents in recruitment window")
            continue
        attributions = attribute_employees(corpus, deal.acquired_id, window)
        employees = [a for a in attributions if a.status == EMPLOYEE]
        freelancers = tuple(
            a.inventor_id for a in attributions if a.status == FREELANCER_DROPPED
        )
        result.freelancer_inventors.update(freelancers)
        support = recruitment_support(window.recruitment)
        treated_support = support.get(deal.acquired_id, set())
        candidates = tuple(
            sorted(
                firm
                for firm, codes in support.items()
                if firm not in deal_involved and codes & treated_support
            )
        )
        cohort = TreatmentCohort(
            deal=deal,
            window=window,
            employees=employees,
            freelancers=freelancers,
            control_candidates=candidates,
        )
        # Anyone ever attributed to a treated firm is barred from control
        # pools, whether or not the cohort survives eligibility.
        result.treated_inventors.update(cohort.employee_ids)
        result.cohorts.append(cohort)

    # An inventor attributed as employee to two treated firms in
    # overlapping windows has no clean counterfactual; drop them from
    # both cohorts before the eligibility check.
    seen: dict[str, list[TreatmentCohort]] = {}
    for cohort in result.cohorts:
        for inv in cohort.employee_ids:
            seen.setdefault(inv, []).append(cohort)
    dropped: dict[str, set[str]] = {}
    for inv, cohorts in seen.items():
        if len(cohorts) < 2:
            continue
        clash = any(
            _windows_overlap(a.window, b.window)
            for i, a in enumerate(cohorts)
            for b in cohorts[i + 1 :]
            if a.treated_firm_id != b.treated_firm_id
        )
        if clash:
            for cohort in cohorts:
                dropped.setdefault(cohort.deal_id, set()).add(inv)
    if dropped:
        n = len({inv for invs in dropped.values() for inv in invs})
        warnings.warn(
            f"dropped {n} inventor(s) employed by multiple treated firms "
            "in overlapping windows"
        )
        for cohort in result.cohorts:
            bad = dropped.get(cohort.deal_id)
            if bad:
                cohort.employees = [
                    a for a in cohort.employees if a.inventor_id not in bad
                ]

    surviving = []
    for cohort in result.cohorts:
        active_after = any(
            corpus.inventor_patents(inv, cohort.window.after)
            for inv in cohort.employee_ids
        )
        counts = {
            "n_employees": len(cohort.employees),
            "n_freelancers": len(cohort.freelancers),
            "n_candidates": len(cohort.control_candidates),
        }
        if not cohort.employees:
            audit(cohort.deal, "excluded", "no attributed employees", **counts)
        elif not active_after:
            audit(cohort.deal, "excluded", "no employee active after event", **counts)
        else:
            audit(cohort.deal, "eligible", "", **counts)
            surviving.append(cohort)
    result.cohorts = surviving
    result.audits.sort(key=lambda a: (a.deal_year, a.deal_id))
    return result
