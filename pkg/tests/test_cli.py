import json
import subprocess
import sys

import numpy as np
import pytest

from adaptive_consensus.cli import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK, main
from adaptive_consensus.sim.output import read_columns, write_columns
from adaptive_consensus.sim.scenarios import van_der_pol_document


def write_doc(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_check_graph_default(tmp_path, capsys):
    cfg = write_doc(tmp_path / "c.json", van_der_pol_document())
    assert main(["check-graph", "--config", cfg]) == EXIT_OK
    out = capsys.readouterr().out
    assert "jointly connected: true" in out
    assert "window 0: t in [0, 1) graphs [1, 2, 3, 4]" in out


def test_check_graph_edgeless(tmp_path, capsys):
    doc = van_der_pol_document()
    doc["graphs"]["family"] = [{"edges": []}]
    doc["schedule"]["cycle"] = [1]
    cfg = write_doc(tmp_path / "c.json", doc)
    assert main(["check-graph", "--config", cfg, "--epsilon", "2"]) == EXIT_INVALID
    assert "jointly connected: false" in capsys.readouterr().out


def test_fit_round_trip(tmp_path, capsys):
    t = np.linspace(0, 10, 2001)
    path = write_columns(tmp_path / "synthetic.csv", {"t": t, "err": 3.0 * np.exp(-1.5 * t)})
    assert main(["fit", "--csv", str(path), "--column", "err", "--from", "1", "--to", "9"]) == EXIT_OK
    out = capsys.readouterr().out
    lam = float(out.split("lambda = ")[1].split(",")[0])
    assert lam == pytest.approx(1.5, rel=1e-9)
    assert main(["fit", "--csv", str(path), "--column", "nope"]) == EXIT_INVALID


def test_run_short_horizon(tmp_path, capsys):
    cfg = write_doc(tmp_path / "c.json", van_der_pol_document())
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out), "--horizon", "0.5", "--dt", "0.005"]) == EXIT_OK
    cols = read_columns(out / "trajectory.csv")
    assert cols["t"][-1] == pytest.approx(0.5) and cols["t"].size == 101
    for name in ("t", "sigma", "v[1]", "x4[2]", "vhat2[3]", "Stilde_norm1", "s3", "u4", "thetahat1[2]", "V"):
        assert name in cols
    assert "final max" in capsys.readouterr().out


def test_replicate_command_outputs(tmp_path):
    out = tmp_path / "rep"
    assert main(["replicate-paper", "--out", str(out), "--horizon", "1"]) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert {"trajectory.csv", "errors.csv", "rates.csv", "config.json", "leader_states.svg",
            "xhat_errors.svg", "what_errors.svg", "tracking_errors.svg"} <= names
    assert (out / "tracking_errors.svg").read_text().startswith("<svg")
    assert json.loads((out / "config.json").read_text())["observer"]["mu1"] == 3.0


def test_invalid_config_exit_code(tmp_path, capsys):
    doc = van_der_pol_document()
    doc["init"]["x"] = [[0.0, 0.0]]
    cfg = write_doc(tmp_path / "c.json", doc)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert "init.x" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_INVALID


def test_blow_up_exit_code(tmp_path, capsys):
    doc = van_der_pol_document()
    doc["agents"] = [{"regressor": "polynomial", "coefficients": ["x1^3", "x2"], "theta": [1.0, 1.0],
                      "disturbance": "0"}]
    doc["graphs"] = {"node_count": 2, "family": [{"edges": [[0, 1]]}]}
    doc["schedule"] = {"type": "periodic", "T0": 1.0, "cycle": [1]}
    doc["init"] = {"x": [[40.0, 0.0]], "v_hat": [[0.0, 0.0, 0.0, 0.0]], "theta_hat": [[0.0, 0.0]]}
    cfg = write_doc(tmp_path / "c.json", doc)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--horizon", "5"]) == EXIT_BLOWUP
    assert "blew up" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "adaptive_consensus", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("run", "check-graph", "fit", "replicate-paper"):
        assert cmd in res.stdout
