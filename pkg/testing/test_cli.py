"""
End-to-end tests: command line through the scenario graph to the files on disk
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json

import numpy as np
import pandas as pd
import pytest

from interfaces.cli import build_parser, format_rows, main, run_command
from utils.constants import (
    CYCLES_COLUMNS, DESIGN_COLUMNS, ERROR_NORMS_COLUMNS, SUMMARY_COLUMNS, KAPPA_NORMS_COLUMNS,
    EXIT_OK, EXIT_CONFIG_ERROR, NodeNames,
)

SMALL_CONFIG = {
    "grid": {"n_nodes": 2},
    "ilc": {"samples_per_hour": 4, "kappa_grid": {"start": 0.0, "stop": 2.0, "points": 5}},
    "run": {"linear": True, "max_workers": 1},
}


def _config(tmp_path, payload=None):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(payload if payload is not None else SMALL_CONFIG), encoding="utf-8")
    return str(path)


def _manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as f:
        return json.load(f)


def test_parser_commands():
    parser = build_parser()
    args = parser.parse_args(["simulate", "kappa_study", "--cycles", "3", "--compress", "1/60"])
    assert args.command == "simulate" and args.scenario == "kappa_study"
    assert args.cycles == 3 and args.compress == "1/60"
    assert parser.parse_args(["design"]).command == "design"


def test_usage_errors_are_config_errors():
    assert main(["simulate", "no_such_scenario"]) == EXIT_CONFIG_ERROR
    assert main([]) == EXIT_CONFIG_ERROR


def test_format_rows_truncates():
    text = format_rows([{"cycle": i} for i in range(5)], max_rows=2)
    assert "3 more rows" in text
    assert format_rows([]) == "No rows to display"


def test_design_writes_certificates(tmp_path):
    out_dir = str(tmp_path / "design")
    code = main(["design", "--config", _config(tmp_path), "--out-dir", out_dir])
    assert code == EXIT_OK

    frame = pd.read_csv(os.path.join(out_dir, "design.csv"))
    assert list(frame.columns) == DESIGN_COLUMNS
    assert len(frame) == 5
    assert frame["kappa"].is_monotonic_increasing
    # without learning Q(I - PL) = Q keeps its unit eigenvalue
    assert not bool(frame.loc[frame["kappa"] == 0.0, "as"].iloc[0])

    with open(os.path.join(out_dir, "checks.json"), encoding="utf-8") as f:
        checks = json.load(f)
    assert checks["upper_blocks_zero"] is True

    manifest = _manifest(out_dir)
    assert manifest["command"] == "design"
    assert manifest["outputs"] == ["checks.json", "design.csv", "manifest.json"]
    assert manifest["config"]["grid"]["n_nodes"] == 2


def test_design_single_node(tmp_path):
    payload = {**SMALL_CONFIG, "grid": {"n_nodes": 1}}
    final_state = run_command("design", config_path=_config(tmp_path, payload),
                              overrides={"out_dir": str(tmp_path / "single")})
    assert final_state["exit_code"] == EXIT_OK
    assert final_state["lifted"].p.shape == (24, 24)


def test_export_matrices(tmp_path):
    out_dir = str(tmp_path / "matrices")
    assert main(["export-matrices", "--config", _config(tmp_path), "--out-dir", out_dir]) == EXIT_OK
    for name in ("A", "B", "E", "C_tilde", "laplacian", "P", "Q", "Q_h", "z"):
        assert os.path.exists(os.path.join(out_dir, f"{name}.csv"))
    p = pd.read_csv(os.path.join(out_dir, "P.csv"), header=None).to_numpy()
    q = pd.read_csv(os.path.join(out_dir, "Q.csv"), header=None).to_numpy()
    q_hour = pd.read_csv(os.path.join(out_dir, "Q_h.csv"), header=None).to_numpy()
    assert p.shape == (48, 48)
    assert q.shape == (48, 48)
    assert q_hour.shape == (24, 24)
    assert q_hour.sum(axis=1) == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(q, np.kron(q_hour, np.eye(2)))


def test_zero_cycles_gives_empty_tables(tmp_path):
    out_dir = str(tmp_path / "empty")
    code = main(["simulate", "load_profiles", "--config", _config(tmp_path),
                 "--out-dir", out_dir, "--cycles", "0"])
    assert code == EXIT_OK
    for name, columns in (("cycles.csv", CYCLES_COLUMNS), ("error_norms.csv", ERROR_NORMS_COLUMNS),
                          ("summary.csv", SUMMARY_COLUMNS)):
        frame = pd.read_csv(os.path.join(out_dir, name))
        assert list(frame.columns) == columns
        assert frame.empty


def test_step_convergence_short_run(tmp_path):
    out_dir = str(tmp_path / "steps")
    final_state = run_command(
        "simulate",
        scenario="step_convergence",
        config_path=_config(tmp_path),
        overrides={"out_dir": out_dir, "cycles": 2, "compress": "1/360", "seed": 5},
    )
    assert final_state["exit_code"] == EXIT_OK
    assert final_state["node_history"][-1] == NodeNames.FINAL_RESPONSE

    cycles = pd.read_csv(os.path.join(out_dir, "cycles.csv"))
    assert len(cycles) == 2 * 24 * 2
    assert cycles["hour"].min() == 1 and cycles["hour"].max() == 24
    assert set(cycles["node"]) == {1, 2}
    # nothing learned yet in the first cycle
    assert (cycles.loc[cycles["cycle"] == 0, "u_ilc"] == 0.0).all()

    norms = pd.read_csv(os.path.join(out_dir, "error_norms.csv"))
    assert list(norms["cycle"]) == [0, 1]
    assert (norms["error_norm"] > 0).all()
    assert _manifest(out_dir)["seeds"]["demand"] == 5

    with open(os.path.join(out_dir, "checks.json"), encoding="utf-8") as f:
        ratio = json.load(f)["control_energy_ratio"]
    # undefined while the ILC input is still zero
    assert len(ratio) == 2 and ratio[0] is None
    assert ratio[1] > 0


def test_kappa_study_writes_one_directory_per_gain(tmp_path):
    payload = {**SMALL_CONFIG, "ilc": {**SMALL_CONFIG["ilc"], "kappa_set": [1.0, 0.5]}}
    out_dir = str(tmp_path / "kappas")
    code = main(["simulate", "kappa_study", "--config", _config(tmp_path, payload),
                 "--out-dir", out_dir, "--cycles", "2", "--compress", "1/360"])
    assert code == EXIT_OK
    for kappa in ("kappa_0.5", "kappa_1"):
        assert os.path.exists(os.path.join(out_dir, kappa, "cycles.csv"))
    frame = pd.read_csv(os.path.join(out_dir, "error_norms_by_kappa.csv"))
    assert list(frame.columns) == KAPPA_NORMS_COLUMNS
    assert list(frame["kappa"]) == [0.5, 0.5, 1.0, 1.0]


def test_invalid_config_exits_with_config_error(tmp_path):
    path = _config(tmp_path, {"grid": {"n_nodes": 2}, "ilc": {"kappa": -1}})
    final_state = run_command("design", config_path=path, overrides={"out_dir": str(tmp_path / "bad")})
    assert final_state["exit_code"] == EXIT_CONFIG_ERROR
    assert final_state["error_info"]["type"] == "config_error"
    assert NodeNames.ERROR_HANDLER in final_state["node_history"]
    assert not os.path.exists(str(tmp_path / "bad"))


def test_bad_compress_override(tmp_path):
    assert main(["design", "--config", _config(tmp_path), "--compress", "fast"]) == EXIT_CONFIG_ERROR
