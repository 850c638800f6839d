import json

import pytest

from framelyap.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr().out
    return rc, json.loads(out) if out.strip() else None


def test_bounds_schema_and_determinism(capsys):
    rc, doc = run(capsys, "--deterministic", "bounds", "--d", "32")
    assert rc == 0
    assert doc["schema"] == 1
    assert doc["command"] == "bounds"
    assert "timestamp" not in doc
    rc, doc = run(capsys, "bounds", "--d", "32")
    assert "timestamp" in doc


def test_select_report_contents(capsys):
    rc, doc = run(capsys, "--deterministic", "select", "--d", "32",
                  "--tau", "const:0.5", "--eps", "0.01")
    assert rc == 0
    result = doc["result"]
    assert result["measure"] == pytest.approx(0.5, abs=1e-9)
    assert result["error"] <= 0.02
    assert result["intervals"]


def test_bisect_single_and_sweep_csv(tmp_path, capsys):
    rc, doc = run(capsys, "--deterministic", "bisect", "--d", "32",
                  "--tau0", "0.333333", "--eps", "0.01")
    assert rc == 0
    assert doc["result"]["error"] <= 0.01
    assert doc["result"]["measure"] <= 0.333334

    csv_path = tmp_path / "sweep.csv"
    rc, doc = run(capsys, "--deterministic", "bisect", "--d", "32",
                  "--tau0", "0.25,0.5,0.75", "--eps", "0.01", "--csv", str(csv_path))
    assert rc == 0
    assert len(doc["result"]["sweep"]) == 3
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "tau0,eps,error,measure"
    assert len(lines) == 4


def test_budget_command(capsys):
    rc, doc = run(capsys, "--deterministic", "budget", "--d", "32",
                  "--tau", "indicator:0.0-0.25,0.5-0.75", "--eps", "0.05")
    assert rc == 0
    assert doc["result"]["measure"] <= doc["result"]["budget"] + 1e-9


def test_quantize_roundtrip_through_frame_file(tmp_path, capsys):
    frame_path = tmp_path / "quantized.json"
    rc, doc = run(capsys, "--deterministic", "quantize", "--fixture", "moving-average",
                  "--d", "32", "--eps", "0.1", "--out-frame", str(frame_path))
    assert rc == 0
    assert doc["result"]["certified_total"] <= 0.1
    rc, doc = run(capsys, "--deterministic", "bounds", "--frame-file", str(frame_path))
    assert rc == 0
    assert 0 < doc["result"]["upper_bound"] < 1.0


def test_aw_with_oracle(capsys):
    rc, doc = run(capsys, "--deterministic", "aw", "--n", "10", "--d", "3",
                  "--seed", "1", "--oracle")
    assert rc == 0
    assert doc["result"]["heuristic_error"] >= doc["result"]["oracle_error"] - 1e-12


def test_povm_select_command(capsys):
    rc, doc = run(capsys, "--deterministic", "povm-select", "--d", "16",
                  "--tau", "const:0.25", "--eps", "0.01")
    assert rc == 0
    assert doc["result"]["measure"] == pytest.approx(0.25, abs=1e-9)


def test_rademacher_command_with_csv(tmp_path, capsys):
    csv_path = tmp_path / "rad.csv"
    rc, doc = run(capsys, "--deterministic", "rademacher", "--d", "4",
                  "--resolution", "64", "--budget", "4", "--csv", str(csv_path))
    assert rc == 0
    assert doc["result"]["phi_full_vs_identity"] <= 1e-12
    assert csv_path.read_text().startswith("set,lam,error")


def test_out_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    rc = main(["--deterministic", "--out", str(out), "bounds", "--d", "16"])
    assert rc == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1


def test_config_file_defaults_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 16, "tau0": "0.25"}))
    rc, doc = run(capsys, "--deterministic", "--config", str(cfg), "bisect")
    assert rc == 0
    assert doc["result"]["tau0"] == 0.25
    rc, doc = run(capsys, "--deterministic", "--config", str(cfg),
                  "bisect", "--tau0", "0.5")
    assert doc["result"]["tau0"] == 0.5


def test_validation_errors_exit_2(capsys):
    assert main(["--deterministic", "bisect", "--d", "16", "--tau0", "1.5"]) == 2
    assert main(["--deterministic", "select", "--d", "16", "--tau", "bogus"]) == 2
    assert main(["--deterministic", "--config", "/nonexistent.json", "bounds"]) == 2
    assert "validation error" in capsys.readouterr().err


def test_guarantee_violation_exits_3(monkeypatch, capsys):
    import framelyap.cli as cli

    def broken(frame, report, tau=None, target=None):
        raise cli.GuaranteeViolation("forced")

    monkeypatch.setattr(cli, "_recheck_selection", broken)
    assert main(["--deterministic", "select", "--d", "16"]) == 3
    assert "guarantee violation" in capsys.readouterr().err


def test_thread_env_var(monkeypatch, capsys):
    monkeypatch.setenv("FRAME_LYAPUNOV_THREADS", "2")
    rc, doc = run(capsys, "--deterministic", "bisect", "--d", "16",
                  "--tau0", "0.25,0.75", "--eps", "0.01")
    assert rc == 0
    assert len(doc["result"]["sweep"]) == 2
    monkeypatch.setenv("FRAME_LYAPUNOV_THREADS", "junk")
    rc, _ = run(capsys, "--deterministic", "bisect", "--d", "16", "--tau0", "0.5")
    assert rc == 0
