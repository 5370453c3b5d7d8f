"""Command-line pipeline over a key = value config file.

Subcommands: ingest, match, panel, estimate, geo, simulate, all.
Precedence is flags > config file > defaults; the effective config is
echoed into the output directory. Exit codes: 0 success, 1 validation
error, 2 numerical failure, 3 I/O error.
"""
import argparse
import csv
import sys
import typing
from dataclasses import dataclass, fields
from pathlib import Path

from .cohort import make_window
from .corpus import (
    apply_alias_review,
    load_alias_review,
    load_deals,
    load_patents,
    write_deals,
    write_patents,
)
from .errors import (
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    EstimationError,
    ValidationError,
)
from .estimators import (
    did_dosage,
    main_specifications,
    naive_difference,
    placebo,
    predict_conditional_stay,
    render_table,
    results_records,
    split_by_experience,
)
from .geo import relocation_summary, relocation_table
from .matching import SimilarityWeights, balance_table, propensity_overlap
from .panel import panel_frame, write_panel
from .pipeline import (
    apply_alias_merge,
    resolve_deal_aliases,
    run_matching,
    run_panel,
    window_frames,
)
from .synth import SynthConfig, generate, recovery_run, truth_lines

ALIAS_QUEUE_HEADER = [
    "focal_firm_id",
    "candidate_assignee_id",
    "candidate_name",
    "score",
    "target",
]
ESTIMATES_HEADER = ["model", "method", "term", "coef", "se", "pvalue", "nobs"]
DOSAGE_LABELS = ("low", "medium", "high")


@dataclass
class RunConfig:
    patents: str = ""
    deals: str = ""
    alias_review: str = ""
    out: str = "out"
    span_start: int = 1900
    span_end: int = 2100
    deal_span_start: int = 0
    deal_span_end: int = 0
    recruit_years: int = 7
    before_years: int = 4
    after_years: int = 4
    weight_tech: float = 0.5
    weight_age: float = 0.25
    weight_size: float = 0.25
    firm_threshold: float = 0.8
    inventor_threshold: float = 0.9
    alias_threshold: float = 0.7
    experience_cutoff: int = 6
    placebo: int = 0
    placebo_scheme: str = "all"
    placebo_seed: int = 0
    corrected_se: bool = False
    windows: str = ""
    seed: int = 0
    n_treated_firms: int = 40
    controls_per_firm: int = 4
    inventors_per_firm: int = 6
    freelancers_per_firm: int = 1
    n_other_ma_deals: int = 2
    ipc_vocabulary_size: int = 0
    profile_concentration: float = 0.8
    perturbation: float = 0.05
    acquisition_years: str = "2000,2004"
    base_activity_rate: float = 0.9
    activity_decay: float = 0.95
    activity_age_slope: float = -0.002
    base_stay_prob: float = 0.8
    secular_trend: float = -0.14
    treatment_effect_stay: float = -0.2
    treatment_effect_active: float = 0.0
    dosage_effect_profile: str = ""
    acquirer_share: float = 0.3
    relocation_rate: float = 0.6
    move_distance_km: float = 300.0

    def validate(self) -> None:
        for name in ("firm_threshold", "inventor_threshold", "alias_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValidationError(f"{name} must be in (0, 1], got {value}")
        make_window(2000, self.recruit_years, self.before_years, self.after_years)
        self.weights  # noqa: B018 - sum-to-one check lives in the dataclass

    @property
    def weights(self) -> SimilarityWeights:
        return SimilarityWeights(self.weight_tech, self.weight_age, self.weight_size)

    @property
    def span(self) -> tuple[int, int]:
        return (self.span_start, self.span_end)

    @property
    def deal_span(self) -> tuple[int, int] | None:
        if self.deal_span_start == 0 and self.deal_span_end == 0:
            return None
        return (self.deal_span_start, self.deal_span_end)

    @property
    def windows_list(self) -> list[int]:
        try:
            return [int(tok) for tok in self.windows.split(",") if tok.strip()]
        except ValueError as exc:
            raise ValidationError(
                f"windows must be a comma-separated list of integers, got {self.windows!r}"
            ) from exc

    def require(self, *names: str) -> None:
        for name in names:
            if not getattr(self, name):
                raise ValidationError(
                    f"config key {name!r} is required for this command"
                )

    def synth_config(self) -> SynthConfig:
        years = tuple(int(t) for t in self.acquisition_years.split(","))
        if len(years) != 2:
            raise ValidationError(
                "acquisition_years must be 'start,end', got "
                f"{self.acquisition_years!r}"
            )
        profile = None
        if self.dosage_effect_profile.strip():
            parts = tuple(
                float(t) for t in self.dosage_effect_profile.split(",")
            )
            if len(parts) != 3:
                raise ValidationError(
                    "dosage_effect_profile must be 'low,medium,high', got "
                    f"{self.dosage_effect_profile!r}"
                )
            profile = parts
        return SynthConfig(
            seed=self.seed,
            n_treated_firms=self.n_treated_firms,
            controls_per_firm=self.controls_per_firm,
            inventors_per_firm=self.inventors_per_firm,
            freelancers_per_firm=self.freelancers_per_firm,
            n_other_ma_deals=self.n_other_ma_deals,
            ipc_vocabulary_size=self.ipc_vocabulary_size,
            profile_concentration=self.profile_concentration,
            perturbation=self.perturbation,
            acquisition_years=(years[0], years[1]),
            recruit_years=self.recruit_years,
            before_years=self.before_years,
            after_years=self.after_years,
            base_activity_rate=self.base_activity_rate,
            activity_decay=self.activity_decay,
            activity_age_slope=self.activity_age_slope,
            base_stay_prob=self.base_stay_prob,
            secular_trend=self.secular_trend,
            treatment_effect_stay=self.treatment_effect_stay,
            treatment_effect_active=self.treatment_effect_active,
            dosage_effect_profile=profile,
            acquirer_share=self.acquirer_share,
            relocation_rate=self.relocation_rate,
            move_distance_km=self.move_distance_km,
        )


def _field_types() -> dict[str, type]:
    hints = typing.get_type_hints(RunConfig)
    return {f.name: hints[f.name] for f in fields(RunConfig)}


def _coerce(key: str, text: str, typ: type):
    if typ is bool:
        lowered = text.strip().lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValidationError(f"config key {key!r} expects a boolean, got {text!r}")
    try:
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
    except ValueError:
        raise ValidationError(
            f"config key {key!r} expects {typ.__name__}, got {text!r}"
        ) from None
    return text


def read_config_file(path: str) -> dict[str, str]:
    """Parse 'key = value' lines; '#' starts a comment, blanks are skipped."""
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}"
                )
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and flags (flags win)."""
    types = _field_types()
    config = RunConfig()

    def apply(key: str, text: str) -> None:
        if key not in types:
            raise ValidationError(f"unknown config key {key!r}")
        setattr(config, key, _coerce(key, text, types[key]))

    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            apply(key, value)
    for key in ("patents", "deals", "alias_review", "out", "windows"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    for key in ("seed", "placebo"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        apply(key.strip(), value.strip())
    config.validate()
    return config


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _write_lines(path: Path, lines) -> None:
    _write_text(path, "\n".join(lines) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _echo_config(config: RunConfig, out: Path) -> None:
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in fields(RunConfig)]
    _write_lines(out / "config_echo.txt", lines)


def _cell(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def _load_inputs(config: RunConfig):
    config.require("patents", "deals")
    corpus, report = load_patents(config.patents, config.span)
    deals = load_deals(config.deals)
    alias_sets = resolve_deal_aliases(corpus, deals, config.alias_threshold)
    if config.alias_review:
        decisions = load_alias_review(config.alias_review)
        alias_sets = {
            deal_id: apply_alias_review(alias_set, decisions)
            for deal_id, alias_set in alias_sets.items()
        }
        corpus = apply_alias_merge(corpus, deals, alias_sets)
    return corpus, deals, report, alias_sets


def _run_matching(config: RunConfig, corpus, deals):
    return run_matching(
        corpus,
        deals,
        recruit_years=config.recruit_years,
        before_years=config.before_years,
        after_years=config.after_years,
        deal_span=config.deal_span,
        firm_threshold=config.firm_threshold,
        inventor_threshold=config.inventor_threshold,
        weights=config.weights,
    )


def cmd_ingest(config: RunConfig) -> None:
    """Validate inputs, resolve aliases, write the audit artifacts."""
    out = _out_dir(config)
    _echo_config(config, out)
    corpus, deals, report, alias_sets = _load_inputs(config)
    n_acquisitions = sum(1 for d in deals if d.deal_type == "acquisition")
    _write_lines(
        out / "ingest_report.txt",
        [
            f"patents_path = {report.path}",
            f"rows_read = {report.rows_read}",
            f"n_patents = {report.n_records}",
            f"rejected_out_of_span = {report.rejected_out_of_span}",
            f"n_firms = {len(corpus.firms())}",
            f"n_inventors = {len(corpus.inventors())}",
            f"n_deals = {len(deals)}",
            f"n_acquisitions = {n_acquisitions}",
            f"n_other_ma = {len(deals) - n_acquisitions}",
        ],
    )
    queue_rows = []
    for deal_id in sorted(alias_sets):
        alias_set = alias_sets[deal_id]
        for cand in alias_set.review_queue:
            queue_rows.append(
                [
                    alias_set.focal_firm_id,
                    cand.assignee_id,
                    cand.assignee_name,
                    repr(cand.score),
                    cand.target,
                ]
            )
    _write_csv(out / "alias_queue.csv", ALIAS_QUEUE_HEADER, queue_rows)


def cmd_match(config: RunConfig) -> None:
    """Cohorts, firm matches, inventor pairs, balance, and overlap files."""
    out = _out_dir(config)
    _echo_config(config, out)
    corpus, deals, _, _ = _load_inputs(config)
    matching = _run_matching(config, corpus, deals)
    _write_csv(
        out / "cohort_audits.csv",
        [
            "deal_id",
            "deal_year",
            "verdict",
            "reason",
            "n_employees",
            "n_freelancers",
            "n_candidates",
        ],
        [
            [
                a.deal_id,
                a.deal_year,
                a.verdict,
                a.reason,
                a.n_employees,
                a.n_freelancers,
                a.n_candidates,
            ]
            for a in matching.build.audits
        ],
    )
    firm_rows = []
    for deal_id in sorted(matching.firm_matches):
        for m in matching.firm_matches[deal_id]:
            firm_rows.append(
                [
                    m.deal_id,
                    m.treated_firm_id,
                    m.control_firm_id,
                    repr(m.tech_sim),
                    repr(m.age_dev),
                    repr(m.size_dev),
                    repr(m.score),
                ]
            )
    _write_csv(
        out / "firm_matches.csv",
        [
            "deal_id",
            "treated_firm_id",
            "control_firm_id",
            "tech_sim",
            "age_dev",
            "size_dev",
            "score",
        ],
        firm_rows,
    )
    _write_csv(
        out / "pairs.csv",
        [
            "pair_id",
            "deal_id",
            "treated_firm_id",
            "control_firm_id",
            "treated_inventor_id",
            "control_inventor_id",
            "tech_sim",
            "tenure_dev",
            "activity_dev",
            "score",
        ],
        [
            [
                p.pair_id,
                p.deal_id,
                p.treated_firm_id,
                p.control_firm_id,
                p.treated_inventor_id,
                p.control_inventor_id,
                repr(p.tech_sim),
                repr(p.tenure_dev),
                repr(p.activity_dev),
                repr(p.score),
            ]
            for p in matching.pairs
        ],
    )
    balance = balance_table(corpus, matching.cohorts_by_deal, matching.pairs)
    _write_text(out / "balance.csv", balance.to_csv())
    overlap = propensity_overlap(corpus, matching.cohorts_by_deal, matching.pairs)
    overlap_rows = [
        [
            repr(float(overlap.bin_edges[i])),
            repr(float(overlap.bin_edges[i + 1])),
            repr(float(overlap.treated_density[i])),
            repr(float(overlap.control_density[i])),
        ]
        for i in range(len(overlap.treated_density))
    ]
    _write_csv(
        out / "overlap.csv",
        ["bin_lo", "bin_hi", "treated_density", "control_density"],
        overlap_rows,
    )


def cmd_panel(config: RunConfig) -> None:
    """Build and write the before/after outcome panel."""
    out = _out_dir(config)
    _echo_config(config, out)
    corpus, deals, _, _ = _load_inputs(config)
    matching = _run_matching(config, corpus, deals)
    observations = run_panel(corpus, matching)
    write_panel(out / "panel.csv", observations)


def _write_relocation(out: Path, corpus, matching, observations) -> None:
    table, skipped = relocation_table(
        corpus, matching.cohorts_by_deal, matching.pairs, observations
    )
    _write_text(out / "relocation.csv", table.to_csv(index=False))
    lines = [
        f"n_rows = {len(table)}",
        f"skipped_missing_coordinates = {skipped}",
    ]
    if len(table) and table["stay"].notna().any():
        summary = relocation_summary(table)
        _write_text(out / "relocation_summary.csv", summary.to_csv(index=False))
        lines.append("summary = relocation_summary.csv")
    else:
        lines.append("summary = unavailable (no located stay outcomes)")
    _write_lines(out / "relocation_report.txt", lines)


def _estimate_outputs(config: RunConfig, out: Path, corpus, matching, observations):
    frame = panel_frame(observations)
    records = []

    def collect(results: dict, prefix: str = "") -> None:
        for row in results_records(results):
            row = dict(row)
            if prefix:
                row["model"] = f"{prefix}{row['model']}"
            records.append(row)

    main = main_specifications(frame)
    _write_text(
        out / "main_table.txt",
        render_table(main, title="Stay regressions on the matched panel"),
    )
    collect(main)

    naive = naive_difference(frame)
    _write_text(
        out / "naive_table.txt",
        render_table(naive, title="Treated-only before/after comparison"),
    )
    collect(naive, "naive_")

    split = split_by_experience(frame, config.experience_cutoff)
    blocks = []
    for stratum, fits in split.items():
        blocks.append(
            render_table(
                fits,
                title=(
                    f"Experience stratum {stratum} "
                    f"(cutoff {config.experience_cutoff})"
                ),
            )
        )
        collect(fits, f"{stratum}_")
    _write_text(out / "split_table.txt", "\n".join(blocks))

    if frame["dosage"].astype(str).isin(DOSAGE_LABELS).any():
        dosage = did_dosage(frame)
        _write_text(
            out / "dosage_table.txt",
            render_table(dosage, title="Dosage regressions (similarity terciles)"),
        )
        collect(dosage, "dosage_")
        predictions = predict_conditional_stay(dosage["heckman"], frame)
        _write_lines(
            out / "conditional_stay.txt",
            [
                f"stay_conditional_{group} = {value:.6f}"
                for group, value in predictions.items()
            ],
        )

    _write_csv(
        out / "estimates.csv",
        ESTIMATES_HEADER,
        [[_cell(row[key]) for key in ESTIMATES_HEADER] for row in records],
    )

    if config.placebo > 0:
        result = placebo(
            frame, config.placebo_scheme, config.placebo, config.placebo_seed
        )
        _write_lines(
            out / "placebo.txt",
            [
                f"scheme = {result.scheme}",
                f"n_permutations = {result.n_permutations}",
                f"seed = {result.seed}",
                f"mean_estimate = {result.mean_estimate:.6f}",
                f"rejection_rate_5pct = {result.rejection_rate:.6f}",
            ],
        )
        _write_csv(
            out / "placebo_draws.csv",
            ["permutation", "estimate", "pvalue"],
            [
                [i, repr(float(est)), repr(float(p))]
                for i, (est, p) in enumerate(
                    zip(result.estimates, result.pvalues)
                )
            ],
        )

    if config.windows_list:
        frames = window_frames(corpus, matching, config.windows_list)
        summary_lines = []
        for a, frame_a in frames.items():
            spec_a = main_specifications(frame_a)
            _write_text(
                out / f"robustness_a{a}_table.txt",
                render_table(
                    spec_a, title=f"Stay regressions, after window {a} years"
                ),
            )
            fit = spec_a["ols"]
            summary_lines.append(
                f"a{a}_ols_interaction = {fit.coef('acquired_x_after'):.6f} "
                f"(se {fit.se_of('acquired_x_after'):.6f})"
            )
        _write_lines(out / "robustness.txt", summary_lines)

    _write_relocation(out, corpus, matching, observations)

    heckman = main["heckman"]
    _write_lines(
        out / "summary.txt",
        [
            f"n_pairs = {len(matching.pairs)}",
            f"n_panel_rows = {len(frame)}",
            f"ols_interaction = {main['ols'].coef('acquired_x_after'):.6f}",
            f"heckman_interaction = "
            f"{heckman.coef('acquired_x_after'):.6f}",
            f"heckman_rho = {heckman.rho:.6f}",
            f"heckman_sigma = {heckman.sigma:.6f}",
        ],
    )


def cmd_estimate(config: RunConfig) -> None:
    """All regression tables plus predictions and relocation outputs."""
    out = _out_dir(config)
    _echo_config(config, out)
    corpus, deals, _, _ = _load_inputs(config)
    matching = _run_matching(config, corpus, deals)
    observations = run_panel(corpus, matching)
    _estimate_outputs(config, out, corpus, matching, observations)


def cmd_geo(config: RunConfig) -> None:
    """Relocation table and summary only."""
    out = _out_dir(config)
    _echo_config(config, out)
    corpus, deals, _, _ = _load_inputs(config)
    matching = _run_matching(config, corpus, deals)
    observations = run_panel(corpus, matching)
    _write_relocation(out, corpus, matching, observations)


def cmd_simulate(config: RunConfig) -> None:
    """Generate a synthetic corpus and verify estimator recovery on it."""
    out = _out_dir(config)
    _echo_config(config, out)
    synth_config = config.synth_config()
    result = generate(synth_config)
    write_patents(result.records, str(out / "patents.csv"))
    write_deals(result.deals, str(out / "deals.csv"))
    _write_lines(out / "truth.txt", truth_lines(result.truth))
    report = recovery_run(
        synth_config,
        firm_threshold=config.firm_threshold,
        inventor_threshold=config.inventor_threshold,
    )
    _write_lines(out / "recovery.txt", report.lines())
    if not report.passed:
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        raise EstimationError(f"recovery checks failed: {failed}")


def cmd_all(config: RunConfig) -> None:
    """Full pipeline on existing inputs: ingest through estimate and geo."""
    cmd_ingest(config)
    cmd_match(config)
    out = _out_dir(config)
    corpus, deals, _, _ = _load_inputs(config)
    matching = _run_matching(config, corpus, deals)
    observations = run_panel(corpus, matching)
    write_panel(out / "panel.csv", observations)
    _estimate_outputs(config, out, corpus, matching, observations)


COMMANDS = {
    "ingest": cmd_ingest,
    "match": cmd_match,
    "panel": cmd_panel,
    "estimate": cmd_estimate,
    "geo": cmd_geo,
    "simulate": cmd_simulate,
    "all": cmd_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patentdid",
        description="Matched difference-in-differences over patent event studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        cmd = sub.add_parser(name, help=func.__doc__)
        cmd.add_argument("--config", help="key = value config file")
        cmd.add_argument("--patents", help="patent table path")
        cmd.add_argument("--deals", help="deal table path")
        cmd.add_argument(
            "--alias-review", dest="alias_review", help="alias decisions path"
        )
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument("--seed", type=int, help="random seed")
        cmd.add_argument("--placebo", type=int, help="placebo permutation count")
        cmd.add_argument("--windows", help="after-window grid, e.g. 3,4,5,6")
        cmd.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override any config key",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        COMMANDS[args.command](config)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
