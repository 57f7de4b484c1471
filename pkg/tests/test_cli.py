import csv
import json
import subprocess
import sys

import pytest

from mimlearn.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OTHER, SUBCOMMANDS, main

SMALL = {"outer_samples": 100, "inner_samples": 4, "fit_samples": 800}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def real(**extra):
    data = {"mode": "real_mim", "eps": 0.2, "seed": 0, "planted": {"variant": "relu", "d": 4},
            "overrides": dict(SMALL), "test_samples": 2000}
    data.update(extra)
    return data


@pytest.mark.parametrize(
    "command, data",
    [
        ("learn-real", real()),
        ("learn-boolean", {"mode": "boolean_mim", "eps": 0.2, "planted": {"variant": "ltf", "d": 4},
                           "overrides": {**SMALL, "eta": 0.5}, "test_samples": 2000}),
        ("learn-proper-ltf", {"mode": "proper_ltf", "eps": 0.3, "planted": {"variant": "ltf", "d": 2},
                              "test_samples": 2000}),
        ("learn-proper-relu", {"mode": "proper_relu", "eps": 0.3, "class_params": {"M": 1.0},
                               "planted": {"variant": "relu", "d": 2}, "test_samples": 2000}),
    ],
)
def test_learn_subcommands(tmp_path, capsys, command, data):
    out = tmp_path / "out"
    assert main([command, "--config", write(tmp_path, data), "--out", str(out), "--deterministic"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["mode"] == SUBCOMMANDS[command]
    for name in ("report.json", "timings.json", "report.csv"):
        assert (out / name).exists()


def test_mode_filled_from_subcommand(tmp_path, capsys):
    data = real()
    del data["mode"]
    assert main(["learn-real", "--config", write(tmp_path, data)]) == 0
    assert json.loads(capsys.readouterr().out)["mode"] == "real_mim"


def test_mode_conflict_is_config_error(tmp_path, capsys):
    assert main(["learn-boolean", "--config", write(tmp_path, real())]) == EXIT_CONFIG
    assert "mode" in capsys.readouterr().err


def test_schema_violation_exit_code(tmp_path, capsys):
    assert main(["learn-real", "--config", write(tmp_path, real(eps=2.0))]) == EXIT_CONFIG
    assert "eps" in capsys.readouterr().err


def test_invalid_json_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["learn-real", "--config", str(path)]) == EXIT_CONFIG


def test_missing_file_exit_code(tmp_path):
    assert main(["learn-real", "--config", str(tmp_path / "absent.json")]) == EXIT_OTHER


def test_budget_exit_code(tmp_path, capsys):
    assert main(["learn-real", "--config", write(tmp_path, real()), "--budget-queries", "10"]) == EXIT_BUDGET
    assert "influence-estimation" in capsys.readouterr().err


def test_seed_flag_overrides_config(tmp_path, capsys):
    path = write(tmp_path, real())
    main(["learn-real", "--config", path, "--seed", "5", "--out", str(tmp_path / "o"), "--deterministic"])
    assert json.loads((tmp_path / "o" / "report.json").read_text())["seed"] == 5


def test_deterministic_cli_reproduces_report(tmp_path):
    path = write(tmp_path, real())
    for name in ("a", "b"):
        assert main(["learn-real", "--config", path, "--out", str(tmp_path / name), "--deterministic"]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_keep_artifacts(tmp_path):
    out = tmp_path / "o"
    assert main(["learn-real", "--config", write(tmp_path, real()), "--out", str(out), "--keep-artifacts"]) == 0
    assert (out / "artifacts" / "influence.json").exists()


def test_sweep_subcommand(tmp_path, capsys):
    data = real(sweep={"eps": [0.4, 0.2], "seeds": [0, 1]})
    assert main(["sweep", "--config", write(tmp_path, data), "--out", str(tmp_path), "--deterministic"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 4
    with open(tmp_path / "sweep.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 4


def test_compare_baseline_subcommand(tmp_path, capsys):
    data = real(baseline={"degree": 3})
    assert main(["compare-baseline", "--config", write(tmp_path, data), "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"query_pipeline", "baseline"}
    assert (tmp_path / "comparison.json").exists() and (tmp_path / "comparison.csv").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mimlearn", "learn-real", "--config", write(tmp_path, real())],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["mode"] == "real_mim"


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        main(["learn-everything", "--config", "x.json"])
