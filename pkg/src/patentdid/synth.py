"""Synthetic patent corpora with known injected effects.

The generator builds one technology block per deal: an acquired firm,
its acquirer, and several control firms drawing from the same IPC
mixture (controls with a small perturbation so matching has to work for
its result). Inventor careers are cloned across the firms of a block,
which guarantees close matches, while outcome draws stay independent
per firm. All cell probabilities are analytic functions of the config,
so estimator recovery can be checked against exact truths.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields

import numpy as np

from .corpus import Corpus, DealEvent, PatentRecord
from .errors import ValidationError
from .estimators import did_dosage, did_heckman, did_ols, naive_difference
from .panel import panel_frame
from .pipeline import run_matching, run_panel

DOSAGE_ORDER = ("low", "medium", "high")  # dosage_effect_profile index order
GROUP_CYCLE = ("high", "medium", "low")  # template k -> GROUP_CYCLE[k % 3]
MAX_TEMPLATE_AGE = 22  # tenure <= 7 plus a pre-career gap <= 15
MIN_CELL, MAX_CELL = 0.01, 0.99
PAIR_FORMATION_TARGET = 0.95


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_treated_firms: int = 40
    controls_per_firm: int = 4
    inventors_per_firm: int = 6
    freelancers_per_firm: int = 1
    n_other_ma_deals: int = 2
    ipc_vocabulary_size: int = 0  # 0 sizes the vocabulary automatically
    profile_concentration: float = 0.8
    perturbation: float = 0.05
    acquisition_years: tuple[int, int] = (2000, 2004)
    recruit_years: int = 7
    before_years: int = 4
    after_years: int = 4
    base_activity_rate: float = 0.90
    activity_decay: float = 0.95
    activity_age_slope: float = -0.002
    base_stay_prob: float = 0.80
    secular_trend: float = -0.14
    treatment_effect_stay: float = -0.20
    treatment_effect_active: float = 0.0
    dosage_effect_profile: tuple[float, float, float] | None = None
    acquirer_share: float = 0.30
    relocation_rate: float = 0.60
    move_distance_km: float = 300.0

    @property
    def codes_per_block(self) -> int:
        # 4 firm codes, 2 acquirer codes, one side code per employee
        # template, one per freelancer template
        return 4 + 2 + self.inventors_per_firm + self.freelancers_per_firm

    @property
    def expected_pairs(self) -> int:
        return self.n_treated_firms * self.inventors_per_firm

    def stay_effects(self) -> dict[str, float]:
        """Injected after-period stay shift per treated group."""
        if self.dosage_effect_profile is None:
            return {g: self.treatment_effect_stay for g in GROUP_CYCLE}
        return dict(zip(DOSAGE_ORDER, self.dosage_effect_profile))

    def cell_probabilities(self) -> dict[str, float]:
        """Every outcome cell the generator draws from, at age slope 0."""
        cells = {
            "activity_before": self.base_activity_rate,
            "activity_after_control": self.base_activity_rate * self.activity_decay,
            "activity_after_treated": (
                self.base_activity_rate * self.activity_decay
                + self.treatment_effect_active
            ),
            "stay_before": self.base_stay_prob,
            "stay_after_control": self.base_stay_prob + self.secular_trend,
        }
        for group, effect in sorted(self.stay_effects().items()):
            cells[f"stay_after_treated_{group}"] = (
                self.base_stay_prob + self.secular_trend + effect
            )
        return cells

    def validate(self) -> None:
        if self.n_treated_firms < 1 or self.controls_per_firm < 1:
            raise ValidationError("need at least one treated and one control firm")
        if self.inventors_per_firm < 1:
            raise ValidationError("need at least one inventor template per firm")
        if not 0.0 <= self.perturbation < 1.0:
            raise ValidationError("perturbation must be in [0, 1)")
        if self.profile_concentration <= 0.0:
            raise ValidationError("profile_concentration must be positive")
        if not 0.0 <= self.acquirer_share <= 1.0:
            raise ValidationError("acquirer_share must be a probability")
        if self.acquisition_years[0] > self.acquisition_years[1]:
            raise ValidationError("acquisition_years range is inverted")
        if self.relocation_rate < 0 or self.relocation_rate > 1:
            raise ValidationError("relocation_rate must be a probability")
        if self.move_distance_km < 0:
            raise ValidationError("move_distance_km must be nonnegative")
        needed = self.n_treated_firms * self.codes_per_block
        if self.ipc_vocabulary_size and self.ipc_vocabulary_size < needed:
            raise ValidationError(
                f"ipc_vocabulary_size {self.ipc_vocabulary_size} cannot cover "
                f"{self.n_treated_firms} blocks ({needed} codes needed)"
            )
        slope_reach = abs(self.activity_age_slope) * MAX_TEMPLATE_AGE
        for name, p in self.cell_probabilities().items():
            lo, hi = p, p
            if name.startswith("activity"):
                lo, hi = p - slope_reach, p + slope_reach
            if lo < MIN_CELL or hi > MAX_CELL:
                raise ValidationError(
                    f"cell probability {name} = {p:.4f} leaves "
                    f"[{MIN_CELL}, {MAX_CELL}] (age slope included); "
                    "refusing a degenerate fixture"
                )


def _ipc_code(n: int) -> str:
    """n-th code of the synthetic vocabulary, in IPC main-group shape."""
    section = chr(ord("A") + n % 8)
    klass = (n // 8) % 100
    subclass = chr(ord("A") + (n // 800) % 26)
    group = (n // 20800) % 1000
    return f"{section}{klass:02d}{subclass}{group:03d}"


def _codename(n: int) -> str:
    syllables = (
        "ba", "ce", "di", "fo", "gu", "ha", "je", "ki",
        "lo", "mu", "na", "pe", "qi", "ro", "su", "ta",
    )
    parts = [syllables[(n // len(syllables) ** i) % len(syllables)] for i in range(3)]
    return "".join(parts).capitalize()


@dataclass(frozen=True)
class _Template:
    index: int
    m: int
    has_side: bool
    tenure: int
    age: int
    group: str
    primaries: tuple[str, ...]
    extra_code: str
    rec_years: tuple[int, ...]

    def signal(self, acq_codes, j: int) -> str:
        if self.group == "high":
            return acq_codes[j % 2]
        if self.group == "low":
            return self.extra_code
        if j % 2 == 0:
            return acq_codes[(j // 2) % 2]
        return self.extra_code


@dataclass
class SynthResult:
    config: SynthConfig
    records: list[PatentRecord]
    deals: list[DealEvent]
    truth: dict
    span: tuple[int, int]

    def corpus(self) -> Corpus:
        return Corpus(self.records, self.span)


class _Generator:
    def __init__(self, config: SynthConfig):
        self.config = config
        self.records: list[PatentRecord] = []
        self.deals: list[DealEvent] = []
        self.patent_counter = itertools.count(1)
        self.homes: dict[str, tuple[float, float]] = {}
        self.names: dict[str, str] = {}
        self.home_counter = itertools.count(0)

    def firm(self, firm_id: str) -> str:
        """Register a firm's display name and home location once."""
        if firm_id not in self.homes:
            idx = next(self.home_counter)
            self.homes[firm_id] = (
                -55.0 + (17 * idx) % 111,
                -170.0 + (29 * idx) % 341,
            )
            self.names[firm_id] = f"{_codename(idx)} {idx:04d}"
        return firm_id

    def add_patent(self, year, firm_id, inventor_id, codes, rng, base=None):
        lat, lon = base if base is not None else self.homes[firm_id]
        jitter = rng.uniform(-0.02, 0.02, size=2)
        self.records.append(
            PatentRecord(
                patent_id=f"P{next(self.patent_counter):07d}",
                application_year=int(year),
                assignee_id=firm_id,
                assignee_name=self.names[firm_id],
                inventors=(inventor_id,),
                ipc_main_groups=tuple(sorted(set(codes))),
                latitude=float(lat + jitter[0]),
                longitude=float(lon + jitter[1]),
            )
        )

    def displaced_home(self, origin, rng) -> tuple[float, float]:
        """A point roughly move_distance_km away in a random direction."""
        distance = rng.exponential(self.config.move_distance_km)
        bearing = rng.uniform(0.0, 2.0 * math.pi)
        lat = origin[0] + distance * math.cos(bearing) / 111.32
        lat = max(-89.0, min(89.0, lat))
        lon = origin[1] + distance * math.sin(bearing) / (
            111.32 * max(0.2, math.cos(math.radians(origin[0])))
        )
        lon = ((lon + 180.0) % 360.0) - 180.0
        if lon == -180.0:
            lon = 180.0
        return (lat, lon)


def _block_templates(config: SynthConfig, firm_codes, block_rng, block: int):
    weights = block_rng.dirichlet(
        np.full(4, config.profile_concentration, dtype=float)
    )
    templates = []
    for k in range(config.inventors_per_firm):
        # The block offset decorrelates career shape from the template
        # slot; without it, pooled covariates degenerate inside narrow
        # age strata (every block would repeat the same few points).
        m = 3 + (k + block) % 4
        tenure = 5 + (k + block) % 3
        gap = int(block_rng.integers(8, 16)) if k % 2 else 0
        primaries = tuple(
            firm_codes[int(block_rng.choice(4, p=weights))] for _ in range(m)
        )
        extra = firm_codes[int(block_rng.integers(4))]
        span = tenure - 4  # recruitment years available once tenure is pinned
        templates.append(
            _Template(
                index=k,
                m=m,
                has_side=m >= 4,
                tenure=tenure,
                age=tenure + gap,
                group=GROUP_CYCLE[k % 3],
                primaries=primaries,
                extra_code=extra,
                rec_years=tuple(-tenure + (j % span) for j in range(m)),
            )
        )
    return templates, weights


def generate(config: SynthConfig) -> SynthResult:
    """Build the synthetic corpus; bit-deterministic given config.seed."""
    config.validate()
    gen = _Generator(config)
    effects = config.stay_effects()
    year_lo, year_hi = config.acquisition_years
    n_years = year_hi - year_lo + 1

    for i in range(config.n_treated_firms):
        event_year = year_lo + i % n_years
        base = i * config.codes_per_block
        firm_codes = [_ipc_code(base + j) for j in range(4)]
        acq_codes = [_ipc_code(base + 4 + j) for j in range(2)]
        side_code = lambda k: _ipc_code(base + 6 + k)  # noqa: E731
        fl_code = lambda f: _ipc_code(base + 6 + config.inventors_per_firm + f)  # noqa: E731

        block_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 11, i]))
        templates, weights = _block_templates(config, firm_codes, block_rng, i)

        treated_id = gen.firm(f"F{i:03d}T")
        acquirer_id = gen.firm(f"A{i:03d}")
        control_ids = [
            gen.firm(f"F{i:03d}C{c}") for c in range(config.controls_per_firm)
        ]
        gen.deals.append(
            DealEvent(
                acquired_id=treated_id,
                acquired_name=gen.names[treated_id],
                acquirer_id=acquirer_id,
                acquirer_name=gen.names[acquirer_id],
                deal_year=event_year,
                deal_type="acquisition",
            )
        )

        # Acquirer staff give the acquirer its recruitment-phase profile.
        staff_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 31, i]))
        for j, year in enumerate((-7, -6, -5, -5)):
            gen.add_patent(
                event_year + year,
                acquirer_id,
                f"{acquirer_id}:S0",
                [acq_codes[j % 2]],
                staff_rng,
            )

        for slot, firm_id in enumerate([treated_id] + control_ids):
            treated_arm = slot == 0
            rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, 21, i, slot])
            )
            dest_id = gen.firm(f"D{i:03d}X{slot}")
            for tpl in templates:
                inventor = f"{firm_id}:I{tpl.index:02d}"
                for j in range(tpl.m):
                    primary = tpl.primaries[j]
                    if not treated_arm and rng.random() < config.perturbation:
                        primary = firm_codes[int(rng.choice(4, p=weights))]
                    gen.add_patent(
                        event_year + tpl.rec_years[j],
                        firm_id,
                        inventor,
                        [primary, tpl.signal(acq_codes, j)],
                        rng,
                    )
                if tpl.has_side:
                    side_firm = gen.firm(f"S{i:03d}K{tpl.index}")
                    gen.add_patent(
                        event_year - 5, side_firm, inventor, [side_code(tpl.index)], rng
                    )
                if tpl.age > tpl.tenure:
                    pre_firm = gen.firm(f"R{i:03d}K{tpl.index}")
                    gen.add_patent(
                        event_year - tpl.age,
                        pre_firm,
                        inventor,
                        [tpl.primaries[0]],
                        rng,
                    )
                _simulate_outcomes(
                    gen, config, rng, tpl, acq_codes, effects, event_year,
                    firm_id, acquirer_id, dest_id, inventor, treated_arm,
                )
            for f in range(config.freelancers_per_firm):
                inventor = f"{firm_id}:F{f}"
                gen.add_patent(
                    event_year - 5, firm_id, inventor, [firm_codes[0]], rng
                )
                fl_firm = gen.firm(f"L{i:03d}F{f}")
                for _ in range(3):
                    gen.add_patent(event_year - 6, fl_firm, inventor, [fl_code(f)], rng)

    for j in range(config.n_other_ma_deals):
        i = j % config.n_treated_firms
        target = f"F{i:03d}C0"
        shell = f"O{j:03d}"
        gen.deals.append(
            DealEvent(
                acquired_id=target,
                acquired_name=gen.names[target],
                acquirer_id=shell,
                acquirer_name=f"Holdco {j:04d}",
                deal_year=year_lo + i % n_years,
                deal_type="other_ma",
            )
        )

    years = [r.application_year for r in gen.records]
    span = (min(years), max(years))
    truth = _truth_table(config, span)
    return SynthResult(
        config=config, records=gen.records, deals=gen.deals, truth=truth, span=span
    )


def _simulate_outcomes(
    gen, config, rng, tpl, acq_codes, effects, event_year,
    firm_id, acquirer_id, dest_id, inventor, treated_arm,
):
    """Draw the before/after activity and stay outcomes for one inventor.

    A period's activity is one Bernoulli draw; an active period yields a
    single filing whose assignee encodes the stay outcome. Outcome
    filings reuse the template's code mix so the pre-event profile keeps
    its designed acquirer-overlap ratio.
    """
    codes = [tpl.primaries[0], tpl.signal(acq_codes, 1)]
    slope = config.activity_age_slope * tpl.age

    p_active_before = config.base_activity_rate + slope
    if rng.random() < p_active_before:
        stay = rng.random() < config.base_stay_prob
        year = event_year - config.before_years + int(
            rng.integers(config.before_years)
        )
        gen.add_patent(year, firm_id if stay else dest_id, inventor, codes, rng)

    p_active_after = config.base_activity_rate * config.activity_decay + slope
    if treated_arm:
        p_active_after += config.treatment_effect_active
    if rng.random() < p_active_after:
        p_stay = config.base_stay_prob + config.secular_trend
        if treated_arm:
            p_stay += effects[tpl.group]
        if not MIN_CELL <= p_stay <= MAX_CELL:
            raise ValidationError(
                f"stay cell for group {tpl.group!r} = {p_stay:.4f} leaves "
                f"[{MIN_CELL}, {MAX_CELL}]"
            )
        stay = rng.random() < p_stay
        year = event_year + int(rng.integers(config.after_years))
        if stay:
            assignee = firm_id
            if treated_arm and rng.random() < config.acquirer_share:
                assignee = acquirer_id
            gen.add_patent(year, assignee, inventor, codes, rng)
        else:
            base = gen.homes[dest_id]
            if rng.random() < config.relocation_rate:
                base = gen.displaced_home(gen.homes[firm_id], rng)
            gen.add_patent(year, dest_id, inventor, codes, rng, base=base)


def _truth_table(config: SynthConfig, span: tuple[int, int]) -> dict:
    truth: dict = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = ""
        truth[f.name] = value
    truth["corpus_span"] = f"{span[0]},{span[1]}"
    truth["expected_pairs"] = config.expected_pairs
    truth["template_group_cycle"] = ",".join(GROUP_CYCLE)
    for name, p in config.cell_probabilities().items():
        truth[f"cell_{name}"] = repr(p)
    return truth


def truth_lines(truth: dict) -> list[str]:
    """Ground truth as the key-value text format reports use."""
    return [f"{key} = {truth[key]}" for key in truth]


@dataclass(frozen=True)
class RecoveryCheck:
    name: str
    estimate: float
    se: float
    truth: float
    tolerance: float
    passed: bool

    @property
    def ci(self) -> tuple[float, float]:
        return (self.estimate - 1.96 * self.se, self.estimate + 1.96 * self.se)


@dataclass
class RecoveryReport:
    config: SynthConfig
    n_pairs: int
    checks: list[RecoveryCheck]
    fits: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> RecoveryCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = [
            f"n_pairs = {self.n_pairs}",
            f"expected_pairs = {self.config.expected_pairs}",
            f"passed = {self.passed}",
        ]
        for c in self.checks:
            lo, hi = c.ci
            out.append(
                f"{c.name} = estimate {c.estimate:.6f} se {c.se:.6f} "
                f"ci [{lo:.6f}, {hi:.6f}] truth {c.truth:.6f} "
                f"tolerance {c.tolerance:.6f} {'PASS' if c.passed else 'FAIL'}"
            )
        return out


def _tolerance_check(name, estimate, se, truth, tolerance) -> RecoveryCheck:
    return RecoveryCheck(
        name=name,
        estimate=float(estimate),
        se=float(se),
        truth=float(truth),
        tolerance=float(tolerance),
        passed=bool(abs(estimate - truth) <= tolerance),
    )


def recovery_run(
    config: SynthConfig,
    *,
    firm_threshold: float = 0.8,
    inventor_threshold: float = 0.9,
) -> RecoveryReport:
    """Generate a corpus, run the full pipeline, compare against truth.

    Interaction estimates must land within 3 standard errors of the
    injected effect; the naive-vs-DiD gap must recover the secular trend
    within 0.05; pair formation must reach the fixture-health floor.
    """
    result = generate(config)
    corpus = result.corpus()
    matching = run_matching(
        corpus,
        result.deals,
        recruit_years=config.recruit_years,
        before_years=config.before_years,
        after_years=config.after_years,
        firm_threshold=firm_threshold,
        inventor_threshold=inventor_threshold,
    )
    observations = run_panel(corpus, matching)
    frame = panel_frame(observations)
    n_pairs = len(matching.pairs)

    checks = [
        _tolerance_check(
            "pair_formation_rate",
            n_pairs / config.expected_pairs,
            0.0,
            1.0,
            1.0 - PAIR_FORMATION_TARGET,
        )
    ]
    fits: dict = {}
    if config.dosage_effect_profile is None:
        truth_effect = config.treatment_effect_stay
        fits["ols"] = did_ols(frame)
        fits["heckman"] = did_heckman(frame)
        for label in ("ols", "heckman"):
            fit = fits[label]
            target = fit.outcome if hasattr(fit, "outcome") else fit
            est = target.coef("acquired_x_after")
            se = target.se_of("acquired_x_after")
            checks.append(
                _tolerance_check(
                    f"did_{label}_interaction", est, se, truth_effect, 3.0 * se
                )
            )
        fits["naive"] = naive_difference(frame)["ols"]
        gap = fits["naive"].coef("after") - fits["ols"].coef("acquired_x_after")
        checks.append(
            _tolerance_check(
                "naive_minus_did_vs_secular_trend",
                gap,
                fits["naive"].se_of("after"),
                config.secular_trend,
                0.05,
            )
        )
    else:
        dosage_fits = did_dosage(frame)
        fits.update(dosage_fits)
        truths = dict(zip(DOSAGE_ORDER, config.dosage_effect_profile))
        estimates = {}
        for label in ("ols", "heckman"):
            fit = dosage_fits[label]
            target = fit.outcome if hasattr(fit, "outcome") else fit
            for level in DOSAGE_ORDER:
                term = f"dose_{level}_x_after"
                est = target.coef(term)
                se = target.se_of(term)
                estimates[(label, level)] = est
                checks.append(
                    _tolerance_check(
                        f"dosage_{label}_{level}", est, se, truths[level], 3.0 * se
                    )
                )
        for label in ("ols", "heckman"):
            margin = min(
                estimates[(label, "medium")] - estimates[(label, "high")],
                estimates[(label, "medium")] - estimates[(label, "low")],
            )
            checks.append(
                RecoveryCheck(
                    name=f"dosage_{label}_medium_least_negative",
                    estimate=float(margin),
                    se=0.0,
                    truth=float(
                        min(
                            truths["medium"] - truths["high"],
                            truths["medium"] - truths["low"],
                        )
                    ),
                    tolerance=0.0,
                    passed=bool(margin > 0.0),
                )
            )
    return RecoveryReport(config=config, n_pairs=n_pairs, checks=checks, fits=fits)
