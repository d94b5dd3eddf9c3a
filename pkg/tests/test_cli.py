import json

import numpy as np
from click.testing import CliRunner

from oaenet import builtin_scenario, generate, write_dataset_csv
from oaenet.cli import main


def invoke(*args, env=None):
    return CliRunner().invoke(main, list(args), env=env, catch_exceptions=False)


def export_small_dataset(tmp_path, seed=4, n=150):
    data = generate(builtin_scenario("2A", n=n), seed)
    path = tmp_path / "data.csv"
    write_dataset_csv(data, path, treatment_column="a", outcome_column="y")
    return path


def test_simulate_writes_report_files(tmp_path):
    out = tmp_path / "report"
    result = invoke(
        "simulate", "--scenario", "2A", "--n", "120", "--replications", "2",
        "--methods", "Targ,Conf", "--seed", "3", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    for name in ("replications.csv", "summary.csv", "selection_proportions.csv", "config.json"):
        assert (out / name).exists()
    assert "Targ" in result.output


def test_simulate_accepts_scenario_config_file(tmp_path):
    spec_path = tmp_path / "scenario.json"
    spec_path.write_text(json.dumps(builtin_scenario("2A", n=100).to_config()))
    out = tmp_path / "report"
    result = invoke(
        "simulate", "--scenario", str(spec_path), "--replications", "1",
        "--methods", "Targ", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    config = json.loads((out / "config.json").read_text())
    assert config["scenario"]["label"] == "2A"


def test_simulate_respects_env_output_dir(tmp_path):
    out = tmp_path / "from-env"
    result = invoke(
        "simulate", "--scenario", "2A", "--n", "100", "--replications", "1",
        "--methods", "Conf",
        env={"OAENET_OUT_DIR": str(out)},
    )
    assert result.exit_code == 0, result.output
    assert (out / "summary.csv").exists()


def test_simulate_unknown_scenario_fails_with_single_error_line(tmp_path):
    result = CliRunner().invoke(
        main,
        ["simulate", "--scenario", "9Z", "--out", str(tmp_path)],
    )
    assert result.exit_code == 1
    err_lines = [l for l in result.stderr.splitlines() if l]
    assert len(err_lines) == 1
    assert err_lines[0].startswith("error: ")


def test_select_emits_json(tmp_path):
    path = export_small_dataset(tmp_path)
    result = invoke(
        "select", "--data", str(path), "--treatment-col", "a", "--outcome-col", "y",
        "--lambda1-count", "8", "--lambda2-grid", "0.1,1.0", "--seed", "2",
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["method"] == "OAENet"
    assert set(payload["selected"]) <= {f"X{j}" for j in range(1, 101)}
    assert payload["penalties"]["lambda1"] > 0
    assert set(payload["coefficients"]) == set(payload["selected"])


def test_select_olas_to_file(tmp_path):
    path = export_small_dataset(tmp_path)
    out = tmp_path / "sel.json"
    result = invoke(
        "select", "--data", str(path), "--treatment-col", "a", "--outcome-col", "y",
        "--method", "OLas", "--lambda1-count", "8", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["method"] == "OLas"
    assert payload["penalties"]["lambda2"] == 0.0


def test_match_reports_att(tmp_path):
    path = export_small_dataset(tmp_path)
    result = invoke(
        "match", "--data", str(path), "--treatment-col", "a", "--outcome-col", "y",
        "--columns", "X1,X2,X3,X4", "--seed", "1",
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert np.isfinite(payload["att"])
    assert payload["n_pairs"] > 0
    assert payload["columns"] == ["X1", "X2", "X3", "X4"]


def test_match_unknown_column_fails(tmp_path):
    path = export_small_dataset(tmp_path)
    result = CliRunner().invoke(
        main,
        ["match", "--data", str(path), "--treatment-col", "a",
         "--outcome-col", "y", "--columns", "X1,nope"],
    )
    assert result.exit_code == 1
    assert "error:" in result.stderr
    assert "nope" in result.stderr
