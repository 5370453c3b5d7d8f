"""Matched difference-in-differences over patent-based event studies.

The package reconstructs an acquisition event-study pipeline: validated
patent/deal corpora with firm-name alias resolution, event-time phase
windows and employment attribution, two-stage similarity matching of
firms then inventors, a censored before/after outcome panel, OLS and
Heckman selection estimators with DiD harnesses, relocation
diagnostics, and a synthetic-corpus generator whose injected effects
serve as recovery oracles for the whole chain.
"""
from .cohort import (
    CohortBuildResult,
    EmploymentAttribution,
    StudyWindow,
    TreatmentCohort,
    attribute_employees,
    build_cohorts,
    make_window,
)
from .corpus import (
    AliasCandidate,
    AliasSet,
    Corpus,
    DealEvent,
    PatentRecord,
    apply_alias_review,
    fold_name,
    levenshtein,
    load_alias_review,
    load_deals,
    load_patents,
    name_similarity,
    normalize_name,
    resolve_aliases,
    write_deals,
    write_patents,
)
from .errors import EstimationError, ValidationError
from .estimators import (
    DesignMatrix,
    FitResult,
    HeckmanResult,
    PlaceboResult,
    build_design,
    did_dosage,
    did_heckman,
    did_ols,
    heckman_two_step,
    inverse_mills,
    main_specifications,
    naive_difference,
    ols,
    placebo,
    predict_conditional_stay,
    probit,
    render_table,
    results_records,
    split_by_experience,
)
from .geo import (
    barycenter,
    haversine_km,
    relocation_summary,
    relocation_table,
    representative_location,
    standard_distance_km,
)
from .matching import (
    FirmMatch,
    InventorPair,
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
from .panel import (
    PanelObservation,
    assign_dosage,
    build_panel,
    outcome_active,
    outcome_stay,
    panel_frame,
    read_panel,
    write_panel,
)
from .pipeline import (
    MatchingOutput,
    run_matching,
    run_panel,
    window_frames,
    window_robustness,
)
from .synth import RecoveryReport, SynthConfig, SynthResult, generate, recovery_run

__version__ = "0.1.0"

__all__ = [
    "AliasCandidate",
    "AliasSet",
    "CohortBuildResult",
    "Corpus",
    "DealEvent",
    "DesignMatrix",
    "EmploymentAttribution",
    "EstimationError",
    "FirmMatch",
    "FitResult",
    "HeckmanResult",
    "InventorPair",
    "MatchingOutput",
    "PanelObservation",
    "PatentRecord",
    "PlaceboResult",
    "RecoveryReport",
    "SimilarityWeights",
    "StudyWindow",
    "SynthConfig",
    "SynthResult",
    "TreatmentCohort",
    "ValidationError",
    "apply_alias_review",
    "assign_dosage",
    "attribute_employees",
    "balance_table",
    "barycenter",
    "build_cohorts",
    "build_design",
    "build_panel",
    "combined_similarity",
    "cosine_similarity",
    "deviation",
    "did_dosage",
    "did_heckman",
    "did_ols",
    "fold_name",
    "generate",
    "haversine_km",
    "heckman_two_step",
    "inverse_mills",
    "levenshtein",
    "load_alias_review",
    "load_deals",
    "load_patents",
    "main_specifications",
    "make_window",
    "match_firms",
    "match_inventors",
    "naive_difference",
    "name_similarity",
    "normalize_name",
    "ols",
    "outcome_active",
    "outcome_stay",
    "panel_frame",
    "placebo",
    "predict_conditional_stay",
    "probit",
    "propensity_overlap",
    "read_panel",
    "recovery_run",
    "relocation_summary",
    "relocation_table",
    "render_table",
    "representative_location",
    "results_records",
    "run_matching",
    "run_panel",
    "split_by_experience",
    "standard_distance_km",
    "tech_profile",
    "window_frames",
    "window_robustness",
    "write_deals",
    "write_panel",
    "write_patents",
]
