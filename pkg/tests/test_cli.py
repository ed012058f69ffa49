import json

import numpy as np
import pytest

from graphon_kuramoto.cli import main
from graphon_kuramoto.io_utils import read_csv_columns


def test_kcrit_graphon_json(capsys):
    assert main(["kcrit-graphon", "--model", "uniform", "--p", "1.0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["K_crit"] == pytest.approx(4 / np.pi, abs=1e-8)
    assert main(["kcrit-graphon", "--model", "arcsine-cosine", "--p", "1.0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["K_crit"] == pytest.approx(1.4892, abs=1e-3)
    assert main(["kcrit-graphon", "--model", "cauchy-like", "--p", "0.5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["K_crit"] == pytest.approx(1 / (0.5 * 0.8284271), abs=1e-4)


def test_spectrum_json(capsys):
    assert main(["spectrum", "--model", "arcsine-cosine", "--p", "1.0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["C"] == pytest.approx(0.7388, abs=1e-3)
    assert out["stable"] is False


def test_sample_deterministic_and_formats(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["sample", "--graphon", "erdos_renyi", "--p", "0.5", "--n", "12",
            "--simple", "--seed", "9"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    gk = tmp_path / "g.gksg"
    assert main(args + ["--format", "bin", "--out", str(gk)]) == 0
    from graphon_kuramoto.graphon import read_step_binary, read_step_csv
    assert np.array_equal(read_step_binary(gk).weights, read_step_csv(a).weights)
    capsys.readouterr()


def test_solve_and_continue_commands(tmp_path, capsys):
    out = tmp_path / "state.csv"
    rc = main(["solve", "--model", "arcsine-cosine", "--graphon", "erdos_renyi",
               "--p", "0.5", "--n", "80", "--K", "5.0", "--seed", "2",
               "--out", str(out)])
    assert rc == 0
    cols = read_csv_columns(out, expected=["j", "x_j", "omega_j", "u_j"])
    assert len(cols["j"]) == 80
    assert "K" in cols["__meta__"]
    branch_path = tmp_path / "branch.csv"
    rc = main(["continue", "--model", "arcsine-cosine", "--graphon", "erdos_renyi",
               "--p", "0.5", "--n", "80", "--K", "6.5", "--K-min", "2.0",
               "--seed", "2", "--out", str(branch_path)])
    assert rc == 0
    cols = read_csv_columns(branch_path,
                            expected=["idx", "K", "r", "smallest_eig", "stable", "fold_flag"])
    assert len(cols["idx"]) >= 5
    capsys.readouterr()


def test_run_experiment_deterministic_rerun(tmp_path, capsys):
    cfg = {"experiment": "convergence_diag", "graphon": {"kind": "erdos_renyi", "p": 0.5},
           "n": [40, 80], "seeds": 2, "master_seed": 3}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg, indent=1))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["run", str(cfg_path), "--out", str(out2)]) == 0
    csv1 = (out1 / "convergence_diag.csv").read_bytes()
    csv2 = (out2 / "convergence_diag.csv").read_bytes()
    assert csv1 == csv2
    man1 = json.loads((out1 / "manifest.json").read_text())
    man2 = json.loads((out2 / "manifest.json").read_text())
    assert man1["config_sha256"] == man2["config_sha256"]
    for key in ("experiment", "master_seed", "package_version", "numpy_version",
                "scipy_version", "wall_time_s", "outputs", "failed_tasks"):
        assert key in man1
    assert (out1 / "summary.txt").exists()
    cols = read_csv_columns(out1 / "convergence_diag.csv",
                            expected=["n", "seed", "degree_dist", "degree_bound",
                                      "cutnorm_lb", "cutnorm_bound"])
    assert len(cols["n"]) == 4
    capsys.readouterr()


def test_run_config_violations(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"experiment": "nope"}')
    assert main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "bad.json:1:" in err
    worse = tmp_path / "worse.json"
    worse.write_text('{\n  "experiment": "convergence_diag",\n  "n": [1]\n}')
    assert main(["run", str(worse)]) == 1
    err = capsys.readouterr().err
    assert "worse.json:3:" in err
    broken = tmp_path / "broken.json"
    broken.write_text('{"experiment": ')
    assert main(["run", str(broken)]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_init_config_round_trip(tmp_path, capsys):
    path = tmp_path / "c.json"
    assert main(["init-config", "convergence_diag", "--out", str(path)]) == 0
    cfg = json.loads(path.read_text())
    assert cfg["experiment"] == "convergence_diag"
    capsys.readouterr()
