# tests/test_cli.py

import csv
import io
import json
import math

import pytest
from scripts.cli import EXIT_BLOW_UP, EXIT_ERROR, EXIT_OK, main
from src.field import GridSpec
from src.manifest import RunManifest
from src.presets import taylor_green_field
from src.snapshot import write_snapshot

SMALL_RUN = {
    "grid": {"sizes": [16, 16], "domain_length": [2 * math.pi, 2 * math.pi]},
    "nu": 0.1,
    "t_end": 0.05,
    "dt": 0.01,
    "analysis": {"snapshot_every": 2},
}


def write_config(tmp_path, data=None) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data or SMALL_RUN))
    return str(path)


def simulate_small(tmp_path, name="run", extra=()) -> str:
    out = str(tmp_path / name)
    code = main(["simulate", "--config", write_config(tmp_path), "--preset", "taylor-green-2d", "--output", out, *extra])
    assert code == EXIT_OK, "Small run should succeed."
    return out


def test_simulate_writes_run_directory(tmp_path, capsys):
    out = simulate_small(tmp_path, extra=["--picard"])
    manifest = RunManifest.load_from_file(out)

    # Assertions
    assert manifest.outcome == "completed" and not manifest.censored, "Manifest should record completion."
    expected = {"config.json", "diagnostics.ndjson", "step_000002.qfld", "step_000004.qfld", "final.qfld", "picard.json"}
    assert set(manifest.files) == expected, "Manifest should list every emitted file."
    for name in manifest.files:
        assert (tmp_path / "run" / name).exists(), f"{name} should exist."
    lines = (tmp_path / "run" / "diagnostics.ndjson").read_text().splitlines()
    assert len(lines) == 6, "Every step of a 5-step run should be recorded."
    assert json.loads((tmp_path / "run" / "picard.json").read_text())["converged"], "Picard report should converge."
    assert "Run completed" in capsys.readouterr().out, "Summary should be printed."


def test_simulate_is_deterministic(tmp_path):
    first = simulate_small(tmp_path, name="first")
    second = simulate_small(tmp_path, name="second")

    # Assertions
    a = (tmp_path / "first" / "diagnostics.ndjson").read_bytes()
    b = (tmp_path / "second" / "diagnostics.ndjson").read_bytes()
    assert a == b, "Identical runs should give byte-identical diagnostics."
    assert RunManifest.load_from_file(first).config_digest == RunManifest.load_from_file(second).config_digest, \
        "Identical configurations should share a digest."


def test_simulate_blow_up_exit_code(tmp_path):
    out = str(tmp_path / "run")

    code = main(["simulate", "--preset", "forced-low-mode", "--amplitude", "1e6", "--output", out])
    manifest = RunManifest.load_from_file(out)

    # Assertions
    assert code == EXIT_BLOW_UP, "Blow-up should exit with code 2."
    assert manifest.outcome == "blow_up" and manifest.censored, "Manifest should be censored."
    assert manifest.message, "Manifest should describe the blow-up."
    last = json.loads((tmp_path / "run" / "diagnostics.ndjson").read_text().splitlines()[-1])
    assert last["blow_up"], "Last record should be flagged."


def test_simulate_errors(tmp_path, capsys):
    # Missing parent directory
    code = main(["simulate", "--preset", "taylor-green-2d", "--output", str(tmp_path / "absent" / "run")])
    assert code == EXIT_ERROR, "Missing parent directory should be an error."

    # Invalid configuration
    bad = dict(SMALL_RUN, dt=1.0)
    code = main(["simulate", "--config", write_config(tmp_path, bad), "--preset", "taylor-green-2d",
                 "--output", str(tmp_path / "run")])
    assert code == EXIT_ERROR, "dt > t_end should be an error."
    assert "dt" in capsys.readouterr().err, "Error should name the offending key."

    # Configuration without an initial field
    code = main(["simulate", "--config", write_config(tmp_path), "--output", str(tmp_path / "run")])
    assert code == EXIT_ERROR, "A config alone should not be enough."


def test_simulate_from_initial_snapshot(tmp_path):
    grid = GridSpec(dim=2, sizes=(16, 16), domain_length=(2 * math.pi, 2 * math.pi))
    initial = str(tmp_path / "initial.qfld")
    write_snapshot(taylor_green_field(grid, amplitude=0.5), initial)

    code = main(["simulate", "--config", write_config(tmp_path), "--initial", initial,
                 "--output", str(tmp_path / "run")])

    # Assertions
    assert code == EXIT_OK, "Run from a snapshot should succeed."
    first = json.loads((tmp_path / "run" / "diagnostics.ndjson").read_text().splitlines()[0])
    assert first["total_energy"] == pytest.approx(0.25 * math.pi ** 2, rel=1e-10), "Energy should match the snapshot."

    # Snapshot on another grid
    wrong = str(tmp_path / "wrong.qfld")
    write_snapshot(taylor_green_field(GridSpec(dim=2, sizes=(32, 32))), wrong)
    code = main(["simulate", "--config", write_config(tmp_path), "--initial", wrong,
                 "--output", str(tmp_path / "other")])
    assert code == EXIT_ERROR, "Grid mismatch should be an error."


def test_decompose_csv(tmp_path, capsys):
    simulate_small(tmp_path)
    capsys.readouterr()

    code = main(["decompose", str(tmp_path / "run" / "final.qfld")])
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))

    # Assertions
    assert code == EXIT_OK, "Decompose should succeed."
    assert rows[0] == ["j", "E_w", "E_x", "E_y", "E_z", "E", "reconstruction_error"], "Header should match."
    assert rows[1][0] == "low", "Low block should come first."
    assert all(float(row[6]) <= 1e-10 for row in rows[1:]), "Reconstruction error should be tiny."
    total = sum(float(row[5]) for row in rows[1:])
    assert total > 0, "The Taylor-Green field should carry energy."

    csv_path = tmp_path / "bands.csv"
    assert main(["decompose", str(tmp_path / "run" / "final.qfld"), "--output", str(csv_path)]) == EXIT_OK
    assert csv_path.read_text().splitlines()[0].startswith("j,E_w"), "CSV should be written to the file."


def test_norms_json_and_scaling(tmp_path, capsys):
    simulate_small(tmp_path)
    snapshot = str(tmp_path / "run" / "final.qfld")
    capsys.readouterr()

    main(["norms", snapshot, "--s", "1.5", "--p", "2", "--q-idx", "inf", "--json"])
    base = json.loads(capsys.readouterr().out)
    main(["norms", snapshot, "--s", "1.5", "--p", "2", "--q-idx", "inf", "--json", "--scale", "2"])
    doubled = json.loads(capsys.readouterr().out)

    # Assertions
    assert base["params"]["q_idx"] == "inf", "Infinite index should be echoed as 'inf'."
    assert set(base["terms"]) >= {"low", "0"}, "Terms should be keyed by band."
    assert doubled["besov_norm"] == pytest.approx(2 * base["besov_norm"], rel=1e-12), "Norm should be homogeneous."
    assert doubled["lp_norm"] == pytest.approx(2 * base["lp_norm"], rel=1e-12), "L^p norm should be homogeneous."

    assert main(["norms", snapshot, "--p", "0.5"]) == EXIT_ERROR, "p < 1 should be rejected."


def test_analyze_writes_report(tmp_path, capsys, monkeypatch):
    out = simulate_small(tmp_path)
    monkeypatch.chdir(tmp_path)
    diagnostics = str(tmp_path / "run" / "diagnostics.ndjson")
    capsys.readouterr()

    code = main(["analyze", diagnostics, "--json"])
    printed = json.loads(capsys.readouterr().out)
    written = json.loads((tmp_path / "diagnostics.analysis.json").read_text())

    # Assertions
    assert code == EXIT_OK, "Analyze should succeed."
    assert printed == written, "Printed and written reports should agree."
    assert written["n_records"] == 6, "Every record should be read."
    assert "error" in written["scaling_fit"], "A single-band Taylor-Green run cannot be fitted."
    assert written["gronwall"]["minimal_c"] == pytest.approx(1.0, abs=1e-6), "Decaying run should touch at C = 1."
    listed = set(RunManifest.load_from_file(out).files) | {"manifest.json"}
    assert {p.name for p in (tmp_path / "run").iterdir()} == listed, "Run directory should hold only listed files."


def test_analyze_empty_file(tmp_path, capsys):
    empty = tmp_path / "empty.ndjson"
    empty.write_text("")

    code = main(["analyze", str(empty)])

    # Assertions
    assert code == EXIT_ERROR, "Empty diagnostics should be an error."
    assert "no diagnostics records" in capsys.readouterr().err, "Error should explain the problem."


def test_analyze_heat_only_slope(tmp_path, capsys, monkeypatch):
    heat = {
        "grid": {"sizes": [64, 64], "domain_length": [2 * math.pi, 2 * math.pi]},
        "nu": 0.05,
        "t_end": 0.02,
        "dt": 0.01,
        "linear_only": True,
    }
    out = str(tmp_path / "heat")
    assert main(["simulate", "--config", write_config(tmp_path, heat), "--preset", "broadband-3d",
                 "--output", out]) == EXIT_OK
    capsys.readouterr()
    monkeypatch.chdir(tmp_path)

    code = main(["analyze", str(tmp_path / "heat" / "diagnostics.ndjson")])
    report = json.loads((tmp_path / "diagnostics.analysis.json").read_text())

    # Assertions
    assert code == EXIT_OK, "Analyze should succeed."
    assert report["scaling_fit"]["slope_in_range"], "Heat-only slope should be close to 2."
    assert all(band["inside"] for band in report["scaling_fit"]["bands"]), "Every band should sit in its bracket."
    assert report["gronwall"]["minimal_c"] <= 1.0 + 1e-6, "Heat flow should need C no larger than 1."
    assert "PASS" in capsys.readouterr().out, "Human report should show the verdict."


def test_norms_of_zero_field(tmp_path, capsys):
    grid = GridSpec(dim=2, sizes=(16, 16))
    path = str(tmp_path / "zero.qfld")
    write_snapshot(taylor_green_field(grid, amplitude=0.0), path)

    code = main(["norms", path, "--json"])
    report = json.loads(capsys.readouterr().out)

    # Assertions
    assert code == EXIT_OK, "Norms should succeed."
    assert report["besov_norm"] == 0.0 and report["lp_norm"] == 0.0, "Zero field should have zero norms."


def test_usage_errors_are_not_blow_ups(capsys):
    # Assertions
    assert main(["simulate", "--preset", "nope"]) == EXIT_ERROR, "Unknown preset should be an error."
    assert main(["norms", "field.qfld", "--p", "abc"]) == EXIT_ERROR, "Non-numeric index should be an error."
    assert main(["frobnicate"]) == EXIT_ERROR, "Unknown command should be an error."
    assert "usage:" in capsys.readouterr().err, "Usage should be printed."
    assert main(["--version"]) == EXIT_OK, "Version should exit cleanly."
