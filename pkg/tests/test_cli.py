import json
import subprocess
import sys

import pytest

from lactate_lab import PrecisionConfig, population_report
from lactate_lab.cli import SEED_ENV, main
from lactate_lab.io import write_csv

HEADER = "athlete_id,stage_speed_kmh,lactate_mmol_per_l,pts_kmh\n"


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


@pytest.fixture(scope="module")
def pop_csv(tmp_path_factory, population):
    path = tmp_path_factory.mktemp("data") / "pop.csv"
    write_csv(population[:20], path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_text(tmp_path, capsys):
    f = tmp_path / "e.csv"
    f.write_text(HEADER + "r1,9.0,1.0,16.5\n")
    code, out, _ = run(capsys, "estimate", "--input", f, "--format", "text")
    assert code == 0
    assert out.strip() == "r1: 13.50 km/h, 4:26.7 min/km"


def test_estimate_json(tmp_path, capsys):
    f = tmp_path / "e.csv"
    f.write_text(HEADER + "r1,9.0,1.0,16.5\n")
    code, out, _ = run(capsys, "estimate", "--input", f, "--fraction", "0.596", "--out-dir", tmp_path / "o")
    doc = json.loads(out)
    assert code == 0 and doc["command"] == "estimate"
    assert doc["results"][0]["lt_kmh"] == pytest.approx(13.47)
    assert (tmp_path / "o" / "estimate.json").read_text() == out
    assert (tmp_path / "o" / "estimate.csv").exists()


def test_bad_header_exit_2(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("athlete,speed,lactate,pts\na,9,1,14\n")
    code, _, err = run(capsys, "dmax", "--input", f)
    assert code == 2 and "format error" in err


def test_missing_file_exit_2(tmp_path, capsys):
    assert run(capsys, "dmax", "--input", tmp_path / "nope.csv")[0] == 2


def test_validation_finding_exit_2(tmp_path, capsys):
    f = tmp_path / "few.csv"
    f.write_text(HEADER + "a,9,1,14\na,10.5,2,14\na,12,3,14\n")
    code, _, err = run(capsys, "dmax", "--input", f)
    assert code == 2 and "insufficient points" in err


def test_missing_seed_exit_3(pop_csv, capsys):
    assert run(capsys, "precision", "--input", pop_csv, "--measurement-sd", "0.2")[0] == 3


def test_missing_sd_exit_3(pop_csv, capsys):
    assert run(capsys, "precision", "--input", pop_csv, "--seed", "1")[0] == 3


def test_bad_fraction_exit_3(pop_csv, capsys):
    assert run(capsys, "estimate", "--input", pop_csv, "--fraction", "1.5")[0] == 3


def test_bad_env_seed_exit_3(pop_csv, capsys, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "abc")
    assert run(capsys, "synth", "--athletes", "2")[0] == 3


def test_dmax(pop_csv, tmp_path, capsys):
    code, out, _ = run(capsys, "dmax", "--input", pop_csv, "--out-dir", tmp_path)
    rows = json.loads(out)["results"]
    assert code == 0 and len(rows) == 20
    assert all(50 < r["transformed_lt_percent"] < 70 for r in rows)
    assert (tmp_path / "dmax.csv").exists() and (tmp_path / "lactate_curves.png").exists()


def test_precision_zero_sd(pop_csv, capsys):
    code, out, _ = run(
        capsys, "precision", "--input", pop_csv, "--measurement-sd", "0", "--bootstrap", "3", "--samples", "3", "--seed", "1"
    )
    res = json.loads(out)["results"]
    assert code == 0
    assert res["ceiling_accuracy"] == 100.0
    assert all(r["sem_percent_ersr"] == 0.0 for r in res["rows"])


def test_env_seed(pop_csv, capsys, monkeypatch):
    args = ("precision", "--input", pop_csv, "--measurement-sd", "0.2", "--bootstrap", "2", "--samples", "3")
    flagged = run(capsys, *args, "--seed", "17")[1]
    monkeypatch.setenv(SEED_ENV, "17")
    assert run(capsys, *args)[1] == flagged


def test_precision_repeat_and_workers(pop_csv, capsys):
    args = ("precision", "--input", pop_csv, "--measurement-sd", "0.2", "--bootstrap", "4", "--samples", "5", "--seed", "3")
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    c = run(capsys, *args, "--workers", "4")[1]
    assert a == b == c


def test_precision_files(pop_csv, tmp_path, capsys):
    run(capsys, "precision", "--input", pop_csv, "--measurement-sd", "0.2", "--bootstrap", "2", "--samples", "3",
        "--seed", "1", "--out-dir", tmp_path)
    for name in ("precision.json", "precision.csv", "error_samples.csv", "error_distribution.png", "precision_residuals.png"):
        assert (tmp_path / name).exists()
    lines = (tmp_path / "error_samples.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 20 * 3


def test_no_figures(pop_csv, tmp_path, capsys):
    run(capsys, "dmax", "--input", pop_csv, "--out-dir", tmp_path, "--no-figures")
    assert (tmp_path / "dmax.csv").exists()
    assert not list(tmp_path.glob("*.png"))


def test_report_matches_library(pop_csv, population, tmp_path, capsys):
    code, out, _ = run(
        capsys, "report", "--input", pop_csv, "--seed", "5", "--bca-resamples", "1000", "--measurement-sd", "0.2",
        "--bootstrap", "3", "--samples", "4", "--out-dir", tmp_path,
    )
    res = json.loads(out)["results"]
    lib = population_report(population[:20], n_resamples=1000, seed=5, precision=PrecisionConfig(0.2, 3, 4, master_seed=5))
    assert code == 0
    assert res["system_accuracy"] == lib.system_accuracy
    assert res["ceiling_accuracy"] == lib.ceiling_accuracy
    assert (res["ci"]["low"], res["ci"]["high"]) == lib.ci
    assert res["acceptance"]["ceiling_source"] == "precision"
    assert res["summary"].endswith(")")
    for name in ("report.json", "residuals.csv", "residuals.png", "precision_residuals.png", "error_samples.csv"):
        assert (tmp_path / name).exists()


def test_report_exclude(pop_csv, population, capsys):
    aid = population[0].athlete_id
    res = json.loads(run(capsys, "report", "--input", pop_csv, "--seed", "1", "--bca-resamples", "200", "--exclude", aid)[1])["results"]
    assert res["n_excluded"] == 1 and res["excluded"][0] == {"athlete_id": aid, "reason": "manual"}
    assert res["acceptance"]["ceiling_source"] == "assumed_100"


def test_synth(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run(capsys, "synth", "--athletes", "3", "--points", "6", "--seed", "2", "--out", out)[0] == 0
    assert len(out.read_text().splitlines()) == 1 + 18
    code, stdout, _ = run(capsys, "synth", "--athletes", "3", "--points", "6", "--seed", "2")
    assert stdout == out.read_text()


def test_module_entry_point(pop_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "lactate_lab", "dmax", "--input", str(pop_csv)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["schema_version"] == "1"
