import json

import numpy as np
import pytest

from thermoflow.cli import load_config, main, run, sweep
from thermoflow.errors import ConfigError


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=1))
    return p


BASE = {
    "metric": {"kind": "flat_torus", "L1": 1.0, "L2": 1.0},
    "lambda": {"modes": [{"k": 0, "const": 1.0}]},
    "params": {"v0": [0.0, 0.0, 0.0], "T": 6.0},
    "seed": 7,
}


def test_conjugate_scan_scenario(tmp_path):
    cfg = load_config(_write(tmp_path, "c.json", BASE), scenario="conjugate-scan")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert abs(summary["first_conjugate_times"][0] - np.pi) < 1e-6
    header = (tmp_path / "out" / "conjugate_report.csv").read_text().splitlines()[0]
    assert header == "v_q1,v_q2,v_theta,first_conjugate_time"
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config"]["lambda"]["modes"][0]["const"] == 1.0
    assert "conjugate_report.csv" in manifest["artifacts"]


def test_integrate_scenario_csv_schema(tmp_path):
    obj = dict(BASE)
    obj["params"] = {"v0": [0.1, 0.2, 0.5], "span": [0.0, 2.0]}
    cfg = load_config(_write(tmp_path, "c.json", obj), scenario="integrate")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    lines = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,q1,q2,theta,vlam,KK,kappa_tilde,m"
    first = [float(x) for x in lines[1].split(",")]
    assert first[0] == 0.0 and abs(first[7] - 1.0) < 1e-15  # m(0) = 1


def test_green_scenario(tmp_path):
    obj = {"metric": {"kind": "flat_torus"}, "params": {"v0": [0.1, 0.2, 0.5]}}
    cfg = load_config(_write(tmp_path, "c.json", obj), scenario="green")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["gap"] < 1e-6


def test_malformed_config_rejected_before_artifacts(tmp_path):
    obj = {"metric": {"kind": "flat_torus", "L1": -2.0}, "params": {"T": 5.0}}
    path = _write(tmp_path, "bad.json", obj)
    code = main(["conjugate-scan", "--config", str(path), "--out", str(tmp_path / "nope")])
    assert code == 2
    assert not (tmp_path / "nope").exists()


def test_unknown_key_rejected_with_line(tmp_path):
    obj = dict(BASE)
    obj["typo_key"] = 1
    path = _write(tmp_path, "bad.json", obj)
    with pytest.raises(ConfigError) as err:
        load_config(path, scenario="conjugate-scan")
    assert "typo_key" in str(err.value) and "line" in str(err.value)


def test_unknown_param_rejected(tmp_path):
    obj = dict(BASE)
    obj["params"] = {"v0": [0, 0, 0], "bogus": 1.0}
    path = _write(tmp_path, "bad.json", obj)
    with pytest.raises(ConfigError):
        load_config(path, scenario="conjugate-scan")


def test_scenario_subcommand_mismatch(tmp_path):
    obj = dict(BASE)
    obj["scenario"] = "green"
    path = _write(tmp_path, "c.json", obj)
    with pytest.raises(ConfigError):
        load_config(path, scenario="conjugate-scan")


def test_conformal_u_mixed_modes_rejected(tmp_path):
    obj = {
        "metric": {
            "kind": "conformal_torus",
            "u": {"expr": "cos_q1", "amplitude": 0.1, "fourier": [[1, 0, 0.05, 0.0]]},
        },
        "params": {"T": 2.0},
    }
    path = _write(tmp_path, "c.json", obj)
    with pytest.raises(ConfigError) as err:
        load_config(path, scenario="conjugate-scan")
    assert "not both" in str(err.value)


def test_reproducibility_bytewise(tmp_path):
    path = _write(tmp_path, "c.json", BASE)
    for sub in ("a", "b"):
        code = main(["conjugate-scan", "--config", str(path), "--out", str(tmp_path / sub)])
        assert code == 0
    for name in ("conjugate_report.csv", "summary.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_magnetic_conjugate_times(tmp_path):
    obj = dict(BASE)
    obj["scenario"] = "conjugate-scan"
    obj["params"] = {"v0": [0.0, 0.0, 0.0], "T": 14.0}
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path)
    code = sweep(cfg, "lambda.modes.0.const", [0.5, 1.0, 2.0], outdir=tmp_path / "sw")
    assert code == 0
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    header = lines[0].split(",")
    col = header.index("first_conjugate_times_0")
    got = [float(line.split(",")[col]) for line in lines[1:]]
    assert np.max(np.abs(np.array(got) - np.array([2 * np.pi, np.pi, np.pi / 2]))) < 1e-6


def test_sweep_green_inverse_T(tmp_path):
    obj = {
        "metric": {"kind": "flat_torus"},
        "scenario": "green",
        "params": {"v0": [0.1, 0.2, 0.5], "T_list": [5.0, 10.0, 20.0, 40.0]},
    }
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path)
    code = sweep(cfg, "params.v0.2", [0.3, 1.1], outdir=tmp_path / "sw")
    assert code == 0
    # every sub-run carries the -1/T shooting values in its green.csv
    data = (tmp_path / "sw" / "params_v0_2_0" / "green.csv").read_text().splitlines()[1:]
    for line, T in zip(data, (5.0, 10.0, 20.0, 40.0)):
        vals = [float(x) for x in line.split(",")]
        assert abs(vals[1] + 1.0 / T) < 1e-8


def test_sweep_empty_values_noop(tmp_path):
    path = _write(tmp_path, "c.json", dict(BASE, scenario="conjugate-scan"))
    cfg = load_config(path)
    assert sweep(cfg, "params.T", [], outdir=tmp_path / "sw") == 0
    assert (tmp_path / "sw" / "sweep.csv").read_text().splitlines()[0].startswith("params.T")


def test_sweep_threaded_matches_sequential(tmp_path):
    obj = dict(BASE, scenario="conjugate-scan")
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path)
    sweep(cfg, "lambda.modes.0.const", [0.5, 1.0, 2.0], outdir=tmp_path / "seq", threads=1)
    sweep(cfg, "lambda.modes.0.const", [0.5, 1.0, 2.0], outdir=tmp_path / "par", threads=3)
    assert (tmp_path / "seq" / "sweep.csv").read_bytes() == (tmp_path / "par" / "sweep.csv").read_bytes()


def test_sweep_records_failures_and_continues(tmp_path):
    obj = dict(BASE, scenario="conjugate-scan")
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path)
    # T = -1 violates the scan precondition inside the run: recorded, sweep continues
    code = sweep(cfg, "params.T", [-1.0, 6.0], outdir=tmp_path / "sw")
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    assert "ok" in lines[2]
    assert code != 0


def test_mirror_check_scenario(tmp_path):
    obj = {
        "metric": {"kind": "flat_torus"},
        "lambda": {"modes": [{"k": 1, "fourier": [[0, 0, 0.0, 0.5]]}]},  # sin(theta)
        "params": {"v0": [0.1, 0.2, 0.5], "T": 2.0},
    }
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="mirror-check")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["is_reversible"] is True
    assert summary["conjugacy_residual"] < 1e-7


def test_construct_gaussian_scenario(tmp_path):
    obj = {
        "metric": {"kind": "conformal_torus", "u": {"expr": "cos_q1", "amplitude": 0.1}},
        "params": {"n": 32, "n_theta": 4},
    }
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="construct-gaussian")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["kk_max"] < 1e-6


def test_maslov_scenario(tmp_path):
    obj = {
        "metric": {"kind": "flat_torus"},
        "params": {"lambda0": 1.0, "c1": 0.0, "c2": 1.0, "n_grid": 256},
    }
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="maslov")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    row = (tmp_path / "out" / "degree_report.csv").read_text().splitlines()[1].split(",")
    assert row[0] == "2" and row[1] == "2"


def test_index_scenario(tmp_path):
    obj = {"metric": {"kind": "flat_torus"}, "params": {"v0": [0.1, 0.2, 0.3], "T": 5.0}}
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="index")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert abs(summary["index_value"] - 0.4) < 1e-8


def test_dominated_scenario_with_seeded_samples(tmp_path):
    obj = {
        "metric": {"kind": "flat_torus"},
        "params": {"n_random": 2, "T": 8.0, "margin": 0.3, "T_list": [5.0, 10.0, 20.0]},
        "seed": 1234,
    }
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="dominated")
    status, ok = run(cfg, tmp_path / "out")
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["status"] == "NEGATIVE"  # flat geodesic: coinciding limits
    lines = (tmp_path / "out" / "certificate.csv").read_text().splitlines()
    assert lines[0] == "q1,q2,theta,u_s,u_u,gap,rate,status"
    assert len(lines) == 3


def test_maslov_scenario_from_curve_csv(tmp_path):
    th = np.linspace(0, 2 * np.pi, 257)
    r = np.tan(th)
    r[np.abs(np.cos(th)) < 1e-13] = 1e18  # huge slope stands in for inf in the CSV
    rows = np.stack([th, np.full_like(th, 0.1), np.full_like(th, 0.2), th, r], axis=1)
    curve = tmp_path / "curve.csv"
    np.savetxt(curve, rows, delimiter=",", header="t,q1,q2,theta,r", comments="")
    obj = {"metric": {"kind": "flat_torus"}, "params": {"curve_csv": str(curve)}}
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="maslov")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    row = (tmp_path / "out" / "degree_report.csv").read_text().splitlines()[1]
    assert row.split(",")[0] == "2"


def test_perturb_experiment_scenario_machine_block(tmp_path):
    obj = {"metric": {"kind": "flat_torus"}, "params": {"T": 5.0, "eps": 0.0, "delta": 0.05}}
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="perturb-experiment")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    text = (tmp_path / "out" / "experiment.txt").read_text()
    machine = json.loads(text.splitlines()[-1])
    assert machine["status"] == "positive-index"
    assert abs(machine["index_perturbed_core"] - 0.4) < 1e-9


def test_integrate_scenario_sphere_schema(tmp_path):
    obj = {
        "metric": {"kind": "round_sphere", "R": 1.0},
        "params": {"v0": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0], "span": [0.0, 1.0]},
    }
    path = _write(tmp_path, "c.json", obj)
    cfg = load_config(path, scenario="integrate")
    status, ok = run(cfg, tmp_path / "out")
    assert status == 0 and ok
    header = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,px,py,pz,wx,wy,wz,vlam,KK,kappa_tilde,m"
