"""Command line interface: config plumbing, subcommands, exit codes."""
from __future__ import annotations

import csv
import math

import pytest

from patentdid.cli import (
    ALIAS_QUEUE_HEADER,
    ESTIMATES_HEADER,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    RunConfig,
    build_config,
    build_parser,
    main,
    read_config_file,
)
from patentdid.corpus import write_deals, write_patents
from patentdid.errors import ValidationError
from patentdid.panel import read_panel

from conftest import mini_deal, mini_study_records


# ---------------------------------------------------------------- config

def test_read_config_file_parses_key_value_lines(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nseed = 9\n\nout = results  \nplacebo=25\n")
    assert read_config_file(str(path)) == {"seed": "9", "out": "results", "placebo": "25"}


def test_read_config_file_rejects_malformed_lines(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed 9\n")
    with pytest.raises(ValidationError, match=r"run\.cfg:1: expected 'key = value'"):
        read_config_file(str(path))


def test_build_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("seed = 3\nout = from_file\nplacebo = 7\nfirm_threshold = 0.85\n")
    parser = build_parser()
    args = parser.parse_args(
        [
            "simulate",
            "--config",
            str(cfg_file),
            "--out",
            "from_flag",
            "--set",
            "seed=11",
            "--set",
            "base_stay_prob=0.75",
        ]
    )
    config = build_config(args)
    assert config.out == "from_flag"  # named flag beats the file
    assert config.seed == 11  # --set beats everything
    assert config.placebo == 7  # file beats the default
    assert config.firm_threshold == 0.85
    assert config.base_stay_prob == 0.75


def test_build_config_rejects_unknown_set_key():
    parser = build_parser()
    args = parser.parse_args(["simulate", "--set", "mystery=1"])
    with pytest.raises(ValidationError, match="mystery"):
        build_config(args)


def test_run_config_parsers():
    config = RunConfig(windows="3,4,5", acquisition_years="1999,2001")
    assert config.windows_list == [3, 4, 5]
    synth = config.synth_config()
    assert synth.acquisition_years == (1999, 2001)
    assert RunConfig(windows="").windows_list == []
    with pytest.raises(ValidationError):
        RunConfig(windows="3,x").windows_list
    with pytest.raises(ValidationError):
        RunConfig(acquisition_years="2000").synth_config()
    dosed = RunConfig(dosage_effect_profile="-0.1,-0.2,-0.3").synth_config()
    assert dosed.dosage_effect_profile == (-0.1, -0.2, -0.3)


def test_boolean_coercion_via_set(tmp_path):
    parser = build_parser()
    for text, expected in (("true", True), ("no", False), ("1", True), ("off", False)):
        args = parser.parse_args(["estimate", "--set", f"corrected_se={text}"])
        assert build_config(args).corrected_se is expected
    args = parser.parse_args(["estimate", "--set", "corrected_se=perhaps"])
    with pytest.raises(ValidationError):
        build_config(args)


# ---------------------------------------------------------------- commands

def _quiet_main(argv):
    # Subgroup fits on the 20-firm fixture clamp rho now and then; the
    # warnings are expected at this scale and drowned out here.
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main(argv)


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    rc = _quiet_main(
        ["simulate", "--out", str(out), "--seed", "5", "--set", "n_treated_firms=20"]
    )
    assert rc == EXIT_OK
    return out


@pytest.fixture(scope="module")
def est_dir(tmp_path_factory, sim_dir):
    out = tmp_path_factory.mktemp("est")
    rc = _quiet_main(
        [
            "estimate",
            "--patents",
            str(sim_dir / "patents.csv"),
            "--deals",
            str(sim_dir / "deals.csv"),
            "--out",
            str(out),
            "--placebo",
            "10",
            "--windows",
            "3,4",
        ]
    )
    assert rc == EXIT_OK
    return out


def test_simulate_outputs(sim_dir):
    for name in ("patents.csv", "deals.csv", "truth.txt", "recovery.txt", "config_echo.txt"):
        assert (sim_dir / name).exists(), name
    truth = (sim_dir / "truth.txt").read_text()
    assert "cell_stay_after_control = " in truth
    recovery = (sim_dir / "recovery.txt").read_text()
    assert "PASS" in recovery and "FAIL" not in recovery
    echo = (sim_dir / "config_echo.txt").read_text()
    assert "seed = 5" in echo
    assert "n_treated_firms = 20" in echo


def test_ingest_outputs(tmp_path, sim_dir):
    out = tmp_path / "ingest"
    rc = main(
        [
            "ingest",
            "--patents",
            str(sim_dir / "patents.csv"),
            "--deals",
            str(sim_dir / "deals.csv"),
            "--out",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    report = (out / "ingest_report.txt").read_text()
    for key in (
        "patents_path",
        "rows_read",
        "n_patents",
        "rejected_out_of_span",
        "n_firms",
        "n_inventors",
        "n_deals",
        "n_acquisitions",
        "n_other_ma",
    ):
        assert f"{key} = " in report
    with open(out / "alias_queue.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ALIAS_QUEUE_HEADER


def test_match_outputs(tmp_path, sim_dir):
    out = tmp_path / "match"
    rc = main(
        [
            "match",
            "--patents",
            str(sim_dir / "patents.csv"),
            "--deals",
            str(sim_dir / "deals.csv"),
            "--out",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    for name in ("cohort_audits.csv", "firm_matches.csv", "pairs.csv", "balance.csv", "overlap.csv"):
        assert (out / name).exists(), name
    with open(out / "pairs.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    assert {"pair_id", "treated_inventor_id", "control_inventor_id"} <= set(rows[0])


def test_panel_output_round_trips(tmp_path, sim_dir):
    out = tmp_path / "panel"
    rc = main(
        [
            "panel",
            "--patents",
            str(sim_dir / "patents.csv"),
            "--deals",
            str(sim_dir / "deals.csv"),
            "--out",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    frame = read_panel(str(out / "panel.csv"))
    assert len(frame) > 0
    assert set(frame["period"]) == {0, 1}


def test_estimate_outputs(est_dir):
    expected = (
        "main_table.txt",
        "naive_table.txt",
        "split_table.txt",
        "dosage_table.txt",
        "conditional_stay.txt",
        "estimates.csv",
        "placebo.txt",
        "placebo_draws.csv",
        "robustness_a3_table.txt",
        "robustness_a4_table.txt",
        "robustness.txt",
        "summary.txt",
        "relocation.csv",
        "relocation_summary.csv",
        "relocation_report.txt",
        "config_echo.txt",
    )
    for name in expected:
        assert (est_dir / name).exists(), name
    summary = (est_dir / "summary.txt").read_text()
    for key in ("n_pairs", "n_panel_rows", "ols_interaction", "heckman_interaction"):
        assert f"{key} = " in summary
    with open(est_dir / "estimates.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    assert header == ESTIMATES_HEADER
    models = {row[0] for row in rows}
    assert "ols" in models and "heckman" in models
    assert any(m.startswith("naive_") for m in models)
    assert any(m.startswith("dosage_") for m in models)
    placebo_text = (est_dir / "placebo.txt").read_text()
    for key in ("scheme", "n_permutations", "seed", "mean_estimate", "rejection_rate_5pct"):
        assert f"{key} = " in placebo_text
    robustness = (est_dir / "robustness.txt").read_text()
    assert "a3_ols_interaction = " in robustness
    assert "a4_ols_interaction = " in robustness


def test_geo_outputs(tmp_path, sim_dir):
    out = tmp_path / "geo"
    rc = main(
        [
            "geo",
            "--patents",
            str(sim_dir / "patents.csv"),
            "--deals",
            str(sim_dir / "deals.csv"),
            "--out",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    for name in ("relocation.csv", "relocation_summary.csv", "relocation_report.txt"):
        assert (out / name).exists(), name
    report = (out / "relocation_report.txt").read_text()
    assert "n_rows = " in report
    assert "skipped_missing_coordinates = " in report


def test_estimate_deterministic_for_same_seed(tmp_path, sim_dir):
    args = lambda out: [
        "estimate",
        "--patents",
        str(sim_dir / "patents.csv"),
        "--deals",
        str(sim_dir / "deals.csv"),
        "--out",
        str(out),
        "--placebo",
        "5",
    ]
    out = tmp_path / "det"
    assert _quiet_main(args(out)) == EXIT_OK
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert _quiet_main(args(out)) == EXIT_OK
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second


# ---------------------------------------------------------------- exit codes

def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["unknown-command"])
    assert exc.value.code == 2


def test_missing_required_inputs_exit_validation(tmp_path, capsys):
    rc = main(["estimate", "--out", str(tmp_path / "x")])
    assert rc == EXIT_VALIDATION
    assert "validation error" in capsys.readouterr().err


def test_missing_file_exits_io(tmp_path, capsys):
    rc = main(
        [
            "estimate",
            "--patents",
            str(tmp_path / "absent.csv"),
            "--deals",
            str(tmp_path / "absent2.csv"),
            "--out",
            str(tmp_path / "x"),
        ]
    )
    assert rc == EXIT_IO
    assert "i/o error" in capsys.readouterr().err


def test_degenerate_corpus_exits_numerical(tmp_path, capsys):
    # The two-pair hand corpus has constant covariates, so estimation
    # aborts with a rank-deficiency diagnostic and exit code 2.
    write_patents(mini_study_records(), str(tmp_path / "patents.csv"))
    write_deals([mini_deal()], str(tmp_path / "deals.csv"))
    rc = main(
        [
            "estimate",
            "--patents",
            str(tmp_path / "patents.csv"),
            "--deals",
            str(tmp_path / "deals.csv"),
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert rc == EXIT_NUMERICAL
    assert "estimation error" in capsys.readouterr().err
