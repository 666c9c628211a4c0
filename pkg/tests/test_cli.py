import json

import numpy as np
import pytest

from lpreduce.cli import main
from lpreduce.dynamics import Trajectory
from lpreduce.errors import ConfigError
from lpreduce.io import config_from_mapping, load_config, read_trajectory_csv, write_trajectory_csv


def _report(path):
    return json.loads(path.read_text())


def test_trajectory_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    n = 5
    traj = Trajectory("x", np.linspace(0, 1, n), rng.random((n, 2)), rng.random((n, 3)), rng.random((n, 2)),
                      rng.random((n, 3)), rng.random((n, 1)), rng.random(n))
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, traj)
    header = path.read_text().splitlines()[0]
    assert header.startswith("t,qstar_0,qstar_1,ftilde_0") and header.endswith("p_0,energy")
    back = read_trajectory_csv(path)
    for name in ("t", "q_star", "f_tilde", "omega_q", "omega_v", "mom", "energy"):
        assert np.array_equal(getattr(back, name), getattr(traj, name))


def test_nested_config_is_flattened(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("system: so3-two-vector\nseed: 7\nintegrator:\n  dt: 0.01\n  t_end: 0.1\n"
                    "validate:\n  points: 3\ntolerances:\n  energy_drift: 1.0e-6\n")
    cfg = load_config(path)
    assert (cfg.system, cfg.seed, cfg.dt, cfg.t_end, cfg.points) == ("so3-two-vector", 7, 0.01, 0.1, 3)
    assert cfg.equation_set == "full" and cfg.tolerance("energy_drift", 1.0) == 1e-6
    assert config_from_mapping({"system": "gauge-lattice"}).equation_set == "special"
    for bad in ({"system": "nope"}, {"integrator": {"dtt": 1}}, {"dt": -1.0}, {"colour": 1},
                {"system": "gauge-lattice", "lattice": {"size": 3}}):
        with pytest.raises(ConfigError):
            config_from_mapping(bad)


def test_missing_config_is_a_usage_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == 2
    assert "usage:" in capsys.readouterr().err
    assert main(["run", "--system", str(tmp_path / "absent.yaml")]) == 2


def test_bad_flags_exit_with_usage(capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--equation-set", "other"])
    assert err.value.code == 2


def test_bad_thread_count_is_a_usage_error(monkeypatch):
    monkeypatch.setenv("LPREDUCE_THREADS", "zero")
    with pytest.raises(SystemExit) as err:
        main(["validate", "--points", "1"])
    assert err.value.code == 2


def test_run_writes_trajectories_and_report(tmp_path):
    out = tmp_path / "so2"
    code = main(["run", "--system", "so2-bead", "--t-end", "0.05", "--dt", "1e-3", "--out", str(out)])
    assert code == 0
    rep = _report(out / "report.json")
    assert rep["schema_version"] == 1 and rep["passed"]
    names = {c["name"] for c in rep["checks"]}
    assert {"energy_drift", "constraint", "reference_max_rel_error", "momentum_drift"} <= names
    lp, el = read_trajectory_csv(out / "trajectory.csv"), read_trajectory_csv(out / "reference.csv")
    assert len(lp) == len(el) == 51
    assert main(["compare", str(out / "trajectory.csv"), str(out / "reference.csv")]) == 0


def test_compare_identical_files_and_mismatched_grids(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--system", "so2-bead", "--t-end", "0.02", "--dt", "1e-3", "--out", str(a)])
    main(["run", "--system", "so2-bead", "--t-end", "0.02", "--dt", "2e-3", "--out", str(b)])
    capsys.readouterr()
    rep_path = tmp_path / "cmp.json"
    path = str(a / "trajectory.csv")
    assert main(["compare", path, path, "--out", str(rep_path)]) == 0
    assert _report(rep_path)["max_rel_error"] == 0.0
    assert main(["compare", path, str(b / "trajectory.csv")]) == 3
    assert "grid mismatch" in capsys.readouterr().err


def test_compare_beyond_tolerance_is_a_mismatch(tmp_path):
    out = tmp_path / "r"
    main(["run", "--system", "so2-bead", "--t-end", "0.02", "--dt", "1e-3", "--out", str(out)])
    lp, el = str(out / "trajectory.csv"), str(out / "reference.csv")
    assert main(["compare", lp, el, "--tolerance", "1e-30"]) == 3


def test_validate_passes_and_zero_tolerance_fails_everything(tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "--system", "so2-bead", "--seed", "42", "--points", "5", "--out", str(out)]) == 0
    assert _report(out / "validate.json")["passed"]
    assert main(["validate", "--system", "so2-bead", "--points", "5", "--tolerance-scale", "0",
                 "--out", str(out)]) == 1
    checks = _report(out / "validate.json")["checks"]
    assert checks and not any(c["passed"] for c in checks)


def test_gauge_validate_runs_the_term_suite(tmp_path):
    out = tmp_path / "g"
    assert main(["validate", "--system", "gauge-lattice", "--dim", "3", "--size", "2", "--group", "su2",
                 "--states", "2", "--out", str(out)]) == 0
    rep = _report(out / "validate.json")
    assert {c["name"] for c in rep["checks"]} >= {"twelve_term_equality", "force_fd_consistency"}
    assert len(rep["diagnostics"]["term_errors"]) == 12


def test_gauge_run_writes_snapshot_and_term_report(tmp_path):
    out = tmp_path / "g"
    assert main(["run", "--system", "gauge-lattice", "--dim", "3", "--size", "2", "--group", "su2",
                 "--t-end", "0.05", "--out", str(out)]) == 0
    rep = _report(out / "report.json")
    assert any(c["name"] == "twelve_term_equality" and c["passed"] for c in rep["checks"])
    assert (out / "final_state.bin").stat().st_size > 0
    assert len(read_trajectory_csv(out / "trajectory.csv")) == 6


def test_config_file_via_system_flag_and_overrides(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("system: gauge-lattice\nlattice: {group: so2}\nlattice_state: {pure_gauge: true}\n"
                   "integrator: {t_end: 0.1, equation_set: full}\n")
    out = tmp_path / "o"
    assert main(["run", "--system", str(cfg), "--dt", "0.05", "--out", str(out)]) == 0
    rep = _report(out / "report.json")
    assert rep["diagnostics"]["dt"] == 0.05
    assert any(c["name"] == "energy_drift" for c in rep["checks"])


def test_lattice_config_errors_are_usage_errors(tmp_path):
    assert main(["run", "--system", "gauge-lattice", "--size", "3", "--out", str(tmp_path)]) == 2


def test_seeded_runs_are_byte_identical(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        main(["run", "--system", "so3-two-vector", "--t-end", "0.02", "--dt", "1e-3", "--seed", "5",
              "--out", str(out)])
    for name in ("trajectory.csv", "reference.csv", "report.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
