import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pnls.cli import main, verify_bounds
from pnls.compare import COLUMNS, CompareRow, compare, read_report, write_report
from pnls.config import ExperimentConfig, GridSpec
from pnls.errors import DomainError
from pnls.fieldio import read_field, write_field
from pnls.grids import ComplexField, Grid1D
from pnls.scattering import reflection_coefficient


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    q0 = ComplexField.from_function(Grid1D.from_bounds(-30, 30, 2048), lambda x: 0.3 / np.cosh(x))
    write_field(d / "q0.csv", q0)
    small = ComplexField.from_function(Grid1D(-40, 0.1, 800), lambda x: 0.3 / np.cosh(x))
    write_field(d / "q0_small.csv", small)
    assert main(["scatter", "--input", str(d / "q0.csv"), "--zmin", "-8", "--zmax", "8", "--nz", "256",
                 "--out", str(d / "r.csv")]) == 0
    return d


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_scatter_output(files):
    r = read_field(files / "r.csv")
    ref = reflection_coefficient(read_field(files / "q0.csv"), Grid1D.from_bounds(-8, 8, 256))
    assert np.max(np.abs(r.values - ref.values)) <= 1e-15
    cfg = json.loads((files / "config.json").read_text())
    assert cfg["command"]["scatter"]["nz"] == 256
    assert cfg["rhp_tol"] == 1e-10


def test_evolve_and_asymptote(files):
    assert main(["evolve", "--r", str(files / "r.csv"), "--t", "2", "--out", str(files / "r2.csv")]) == 0
    r, r2 = read_field(files / "r.csv"), read_field(files / "r2.csv")
    assert np.max(np.abs(r2.values - r.values * np.exp(-2j * r.grid.nodes ** 2))) <= 1e-15
    assert main(["asymptote", "--r", str(files / "r.csv"), "--t", "50", "--nx", "33",
                 "--out", str(files / "qas.csv")]) == 0
    assert read_field(files / "qas.csv").grid.count == 33
    # t below t_min is an input error
    assert main(["asymptote", "--r", str(files / "r.csv"), "--t", "0.5", "--out", str(files / "x.csv")]) == 1


def test_reconstruct_with_residuals(files):
    assert main(["reconstruct", "--r", str(files / "r.csv"), "--xmin", "-3", "--xmax", "3", "--nx", "7",
                 "--out", str(files / "q_rec.csv")]) == 0
    q = read_field(files / "q_rec.csv")
    assert np.max(np.abs(q.values - 0.3 / np.cosh(q.grid.nodes))) <= 1e-4
    rows = _rows(files / "q_rec_residual.csv")
    assert rows[0] == ["index", "x", "residual", "iterations", "jump_residual"]
    assert len(rows) == 8 and all(float(row[2]) <= 1e-9 for row in rows[1:])


def test_pde_with_mass_trace(files):
    out, trace = files / "qT.csv", files / "mass.csv"
    assert main(["pde", "--q0", str(files / "q0_small.csv"), "--epsilon", "1e-3", "--l", "4", "--T", "0.5",
                 "--dt", "0.01", "--out", str(out), "--mass-trace", str(trace)]) == 0
    m = np.array([[float(v) for v in row] for row in _rows(trace)[1:]])
    assert m.shape == (51, 2) and np.ptp(m[:, 1]) <= 1e-12
    assert read_field(out).grid.count == 800


def test_perturb_writes_trajectory(files):
    out = files / "traj"
    assert main(["perturb", "--r0", str(files / "r.csv"), "--T", "0.25", "--steps", "2",
                 "--inner-nodes", "16", "--out", str(out)]) == 0
    rows = _rows(out / "norms.csv")
    assert rows[0] == ["t", "h11", "sup", "f_h11"] and len(rows) == 4
    assert sorted(p.name for p in out.glob("r_*.csv")) == ["r_0000.csv", "r_0001.csv", "r_0002.csv"]
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["command"]["perturb"]["steps"] == 2


def test_perturb_flags_override_config(files, tmp_path):
    path = tmp_path / "cfg.json"
    ExperimentConfig(epsilon=0.0).dump(path)
    out = tmp_path / "traj"
    assert main(["--config", str(path), "perturb", "--r0", str(files / "r.csv"), "--T", "0.5",
                 "--steps", "1", "--inner-nodes", "8", "--out", str(out)]) == 0
    # epsilon = 0 from the config: the trajectory is constant
    a, b = read_field(out / "r_0000.csv"), read_field(out / "r_0001.csv")
    assert np.array_equal(a.values, b.values)


def test_exit_codes(files, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["scatter"])
    assert info.value.code == 1
    assert main(["scatter", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "r.csv")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,field\n")
    assert main(["evolve", "--r", str(bad), "--t", "1", "--out", str(tmp_path / "o.csv")]) == 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_key": 1}))
    assert main(["--config", str(cfg), "evolve", "--r", str(files / "r.csv"), "--t", "1",
                 "--out", str(tmp_path / "o.csv")]) == 1
    assert main(["--threads", "0", "evolve", "--r", str(files / "r.csv"), "--t", "1",
                 "--out", str(tmp_path / "o.csv")]) == 1


def test_threads_flag(files, tmp_path):
    assert main(["--threads", "2", "pde", "--q0", str(files / "q0_small.csv"), "--T", "0.1",
                 "--dt", "0.01", "--out", str(tmp_path / "q.csv")]) == 0


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "pnls.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in ("scatter", "reconstruct", "evolve", "asymptote", "perturb", "pde", "verify-bounds", "compare"):
        assert name in res.stdout


def test_verify_bounds_minf_report(tmp_path):
    out = tmp_path / "minf.csv"
    code = main(["verify-bounds", "--suite", "minf", "--out", str(out)])
    rows = _rows(out)
    assert rows[0] == ["quantity", "t", "value", "fitted_exponent", "target_exponent", "pass"]
    assert [float(r[1]) for r in rows[1:]] == [1.0, 4.0, 16.0, 64.0]
    assert code == (0 if all(r[5] == "1" for r in rows[1:]) else 2)


def test_verify_bounds_unknown_suite():
    with pytest.raises(ValueError):
        verify_bounds("nope", ExperimentConfig())


# --- config ------------------------------------------------------------------------
def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(q0="gaussian:0.4", sweep_times=(10, 20), z_grid=GridSpec(-6, 6, 256))
    cfg.dump(tmp_path / "c.json")
    again = ExperimentConfig.load(tmp_path / "c.json")
    assert again == cfg


@pytest.mark.parametrize("change", [
    {"rhp_tol": 0.0}, {"pde_dx": -0.1}, {"sweep_times": (100, 50)}, {"sweep_times": (0.5, 2)},
    {"threads": 0}, {"perturbation": "tophat:1"}, {"l": 2.5}, {"pde_dt_min": 1.0}])
def test_config_validation(change):
    with pytest.raises((ValueError, DomainError)):
        ExperimentConfig(**change).validate(check_rho=False)


def test_config_missing_file_and_rho(tmp_path):
    with pytest.raises(FileNotFoundError):
        ExperimentConfig(q0=str(tmp_path / "nope.csv")).validate(check_rho=False)
    # |r(0)|^2 = 1 - 1/cosh^2(8 pi) rounds to 1
    with pytest.raises(DomainError):
        ExperimentConfig(q0="sech:8", z_grid=GridSpec(-8, 8, 257)).validate(check_rho=True)


def test_config_file_field(files):
    cfg = ExperimentConfig(q0=str(files / "q0.csv"))
    cfg.validate(check_rho=True)
    assert cfg.initial_field().grid.count == 2048


# --- compare --------------------------------------------------------------------------
def _tiny(**kw):
    base = dict(q0="zero:0", sweep_times=(1.0, 2.0), cone_z=2.0, cone_pad=20.0, ist_points=2,
                z_grid=GridSpec(-6, 6, 256))
    base.update(kw)
    return ExperimentConfig(**base)


def test_compare_trivial_config():
    rep = compare(_tiny())
    assert rep.passes and len(rep.rows) == 2
    for row in rep.rows:
        assert row.status == "ok"
        assert row.err_pde_qas == row.err_ist_qas == row.err_ist_pde == row.sup_q == 0.0


def test_compare_cli_outputs(tmp_path):
    path = tmp_path / "cfg.json"
    _tiny(output_dir=str(tmp_path / "out")).dump(path)
    assert main(["--config", str(path), "compare"]) == 0
    out = tmp_path / "out"
    assert _rows(out / "compare.csv")[0] == list(COLUMNS)
    assert json.loads((out / "summary.json").read_text())["passes"] is True
    assert ExperimentConfig.load(out / "config.json") == ExperimentConfig.load(path)


def test_report_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    rows = tuple(CompareRow(float(t), float(rng.random()), int(n),
                            *(float(v) for v in rng.standard_normal(7) * 10.0 ** rng.integers(-17, 5, 7)),
                            status)
                 for t, n, status in ((50.0, 4096, "ok"), (1e-300, 1, "pde: failed, see log"),
                                      (400.0, 123457, "ok")))
    write_report(tmp_path / "rep.csv", rows)
    back = read_report(tmp_path / "rep.csv")
    assert back == rows
    assert all(type(a) is type(b) for r1, r2 in zip(rows, back) for a, b in zip(r1.__dict__.values(), r2.__dict__.values()))


def test_report_with_nan_round_trips(tmp_path):
    nan = float("nan")
    row = CompareRow(5.0, nan, 0, nan, nan, nan, nan, nan, nan, nan, "pde: not reached")
    write_report(tmp_path / "r.csv", [row])
    (back,) = read_report(tmp_path / "r.csv")
    assert back.status == row.status and np.isnan(back.err_pde_qas)
