import csv
import json
import math

import numpy as np
import pytest

from gqsl.cli import BOUND_HEADER, main
from gqsl.io import ModelSpec, SpecError, SweepSpec, dump_density_trajectory, load_density_trajectory
from gqsl.mixed import DensityTrajectory
from gqsl.numerics import mat_exp

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def gain_loss(tmp_path, name, g, gL, gG, **extra):
    return write(tmp_path / f"{name}.json", {"model": "gain_loss", "params": {"g": g, "gamma_L": gL, "gamma_G": gG}, **extra})


# -- evolve -----------------------------------------------------------------


def test_evolve_gain_loss_columns_and_identity(tmp_path):
    spec = gain_loss(tmp_path, "red", 0.2, 0.8, 0.4, grid={"t_max": 6.0})
    out = tmp_path / "red.csv"
    assert main(["evolve", "--spec", spec, "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["t", "re_0", "im_0", "re_1", "im_1", "norm", "V_numeric", "V_analytic", "S_cum"]
    col = {h: data[:, i] for i, h in enumerate(header)}
    assert np.max(np.abs(col["V_numeric"] - col["V_analytic"]) / col["V_analytic"]) < 1e-5
    assert col["t"][-1] == pytest.approx(6.0)
    assert np.all(np.diff(col["S_cum"]) >= 0)


def test_evolve_zero_hamiltonian(tmp_path):
    spec = write(tmp_path / "h0.json", {"model": "hermitian_matrix", "params": {"H": {"re": [[0, 0], [0, 0]]}}, "grid": {"t_max": 1.0}})
    out = tmp_path / "h0.csv"
    assert main(["evolve", "--spec", spec, "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert np.all(data[:, header.index("V_numeric")] == 0.0)
    assert np.all(data[:, header.index("V_analytic")] == 0.0)


def test_evolve_bethe_lamb_atom(tmp_path):
    params = {"gamma_1": 10.0, "gamma_2": 6.25e8, "Delta": 1.8e8, "Omega": 6e7}
    spec = write(tmp_path / "bl.json", {"model": "bethe_lamb", "params": params, "grid": {"t_max": 1.6e-8}})
    out = tmp_path / "bl.csv"
    assert main(["evolve", "--spec", spec, "--out", str(out)]) == 0
    _, data = read_csv(out)
    assert np.all(np.isfinite(data))


def test_evolve_tabulated_has_no_analytic_column(tmp_path):
    ts = np.linspace(0, 1, 101)
    samples = [mat_exp(0.5 * SX, -1j * t) @ np.array([1, 0]) for t in ts]
    payload = {"model": "tabulated", "params": {"dt": ts[1], "samples": [{"re": s.real.tolist(), "im": s.imag.tolist()} for s in samples]}}
    spec = write(tmp_path / "tab.json", payload)
    out = tmp_path / "tab.csv"
    assert main(["evolve", "--spec", spec, "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert "V_analytic" not in header
    assert np.allclose(data[:, header.index("V_numeric")], 1.0, atol=1e-4)
    assert main(["bound", "--spec", spec, "--out", str(out), "--sweep", "0.555:1:2"]) == 2


def test_hbar_scaling_is_consistent(tmp_path):
    a = gain_loss(tmp_path, "a", 0.2, 0.8, 0.4, grid={"t_max": 2.0})
    b = gain_loss(tmp_path, "b", 0.4, 1.6, 0.8, hbar=2.0, grid={"t_max": 2.0})
    for spec in (a, b):
        assert main(["bound", "--spec", spec, "--out", spec + ".csv"]) == 0
    assert np.allclose(read_csv(a + ".csv")[1], read_csv(b + ".csv")[1], rtol=1e-12)


def test_custom_initial_state_falls_back_to_generic_path(tmp_path):
    spec = gain_loss(tmp_path, "c", 0.7, 0.8, 0.4, initial_state={"re": [1, 0]}, grid={"t_max": 3.0})
    out = tmp_path / "c.csv"
    assert main(["evolve", "--spec", spec, "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert data[0, header.index("re_0")] == 1.0
    V, Va = data[:, header.index("V_numeric")], data[:, header.index("V_analytic")]
    assert np.max(np.abs(V - Va) / Va) < 1e-4


# -- bound ------------------------------------------------------------------


def test_bound_equal_kappa_plus_files_coincide(tmp_path):
    files = {}
    for name, (gL, gG) in {"kp06": (0.8, 0.4), "loss": (0.6, 0.0), "gain": (0.0, 0.6)}.items():
        spec = gain_loss(tmp_path, name, 0.2, gL, gG)
        out = tmp_path / f"{name}.csv"
        assert main(["bound", "--spec", spec, "--out", str(out), "--sweep", "0.5:6:12"]) == 0
        header, files[name] = read_csv(out)
        assert tuple(header) == BOUND_HEADER
    assert np.max(np.abs(files["loss"] - files["gain"])) < 1e-8
    assert np.all(files["kp06"][:, 4] > files["loss"][:, 4])


def test_bound_pt_ordering(tmp_path):
    S = {}
    for name, g in (("weak", 0.2), ("strong", 0.6)):
        spec = write(tmp_path / f"{name}.json", {"model": "pt_symmetric", "params": {"g": g, "gamma": 0.4}})
        out = tmp_path / f"{name}.csv"
        assert main(["bound", "--spec", spec, "--out", str(out), "--sweep", "0.5:6:12"]) == 0
        S[name] = read_csv(out)[1]
    assert np.all(S["strong"][:, 2] > S["weak"][:, 2])


def test_bound_geodesic_limit(tmp_path):
    H = [[0.3, 1.0], [1.0, -0.7]]
    T = 1e-3 / np.linalg.norm(H, 2)
    spec = write(tmp_path / "h.json", {"model": "hermitian_matrix", "params": {"H": {"re": H}}})
    out = tmp_path / "h.csv"
    assert main(["bound", "--spec", spec, "--out", str(out), "--sweep", f"{T}:{T}:1"]) == 0
    _, data = read_csv(out)
    assert data.shape == (1, 6) and data[0, 5] > 0.999


def test_bound_uses_grid_t_list(tmp_path):
    spec = gain_loss(tmp_path, "tl", 0.7, 0.8, 0.4, grid={"t_list": [0.5, 1.0, 2.0]})
    out = tmp_path / "tl.csv"
    assert main(["bound", "--spec", spec, "--out", str(out)]) == 0
    assert np.allclose(read_csv(out)[1][:, 0], [0.5, 1.0, 2.0])


def test_rows_satisfy_invariants(tmp_path):
    spec = gain_loss(tmp_path, "inv", 0.7, 0.8, 0.4)
    out = tmp_path / "inv.csv"
    assert main(["bound", "--spec", spec, "--out", str(out), "--sweep", "0.01:20:9:log"]) == 0
    _, d = read_csv(out)
    assert np.all(d[:, 2] >= d[:, 1] - 1e-4)
    assert np.all((0 <= d[:, 5]) & (d[:, 5] <= 1 + 1e-6))


def test_byte_identical_output(tmp_path):
    spec = gain_loss(tmp_path, "det", 0.2, 0.8, 0.4)
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        assert main(["bound", "--spec", spec, "--out", str(out), "--sweep", "0.5:6:4"]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


# -- input errors and exit codes -------------------------------------------


def test_schema_errors_exit_2(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", {"model": "gain_loss", "params": {"g": 0.2, "gamma_L": 0.8}})
    assert main(["evolve", "--spec", bad, "--out", str(tmp_path / "x.csv")]) == 2
    assert "gamma_G" in capsys.readouterr().err
    extra = write(tmp_path / "extra.json", {"model": "gain_loss", "params": {"g": 0, "gamma_L": 0, "gamma_G": 0}, "colour": "red"})
    assert main(["evolve", "--spec", extra, "--out", str(tmp_path / "x.csv")]) == 2
    assert "colour" in capsys.readouterr().err
    nonherm = write(tmp_path / "nh.json", {"model": "hermitian_matrix", "params": {"H": {"re": [[0, 1], [0, 0]]}}})
    assert main(["bound", "--spec", nonherm, "--out", str(tmp_path / "x.csv"), "--sweep", "1:1:1"]) == 2
    assert main(["evolve", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.csv")]) == 2
    spec = gain_loss(tmp_path, "ok", 0.2, 0.8, 0.4)
    assert main(["bound", "--spec", spec, "--out", str(tmp_path / "x.csv"), "--sweep", "3:1:2"]) == 2
    assert main(["bound", "--spec", spec, "--out", str(tmp_path / "x.csv")]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    spec = write(
        tmp_path / "blow.json",
        {"model": "matrix", "params": {"H": {"re": [[0, 0], [0, 0]], "im": [[400, 0], [0, 0]]}}, "grid": {"t_max": 2.0}},
    )
    assert main(["evolve", "--spec", spec, "--out", str(tmp_path / "x.csv")]) == 3
    assert "t=" in capsys.readouterr().err


def test_spec_roundtrip():
    data = {
        "model": "matrix",
        "params": {"H": {"re": [[0, 1], [2, 0]], "im": [[0.5, 0], [0, 0]]}},
        "hbar": 0.5,
        "initial_state": {"re": [1, 0], "im": [0, 1]},
        "grid": {"t_max": 2.0, "steps": 100},
    }
    spec = ModelSpec.from_dict(data)
    again = ModelSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec
    assert again.dim == 2


def test_spec_grid_rules():
    base = {"model": "pt_symmetric", "params": {"g": 0.2, "gamma": 0.4}}
    with pytest.raises(SpecError):
        ModelSpec.from_dict({**base, "grid": {"t_list": [1.0], "t_max": 2.0}})
    with pytest.raises(SpecError):
        ModelSpec.from_dict({**base, "grid": {"t_list": [2.0, 1.0]}})
    with pytest.raises(SpecError):
        ModelSpec.from_dict({**base, "initial_state": {"re": [1, 0, 0]}})
    assert ModelSpec.from_dict(base).uses_default_state


def test_sweep_parsing():
    assert SweepSpec.parse("1:3:3").values == (1.0, 2.0, 3.0)
    log = SweepSpec.parse("1e-3:1e-1:3:log").values
    assert log == pytest.approx((1e-3, 1e-2, 1e-1))
    for bad in ("1:2", "0:1:3", "2:1:3", "1:2:3:cubic", "a:b:c", "1:2:1"):
        with pytest.raises(SpecError):
            SweepSpec.parse(bad)


# -- density ingestion and mixed -------------------------------------------


def unitary_orbit(n=3001):
    ts = np.linspace(0, 3, n)
    r0 = np.diag([0.75, 0.25]).astype(complex)
    return DensityTrajectory(np.array([mat_exp(SX, -0.5j * t) @ r0 @ mat_exp(SX, 0.5j * t) for t in ts]), ts[1])


def test_density_roundtrip_and_mixed_run(tmp_path, capsys):
    path = tmp_path / "orbit.json"
    dump_density_trajectory(unitary_orbit(), path)
    loaded = load_density_trajectory(path)
    assert np.allclose(loaded.samples, unitary_orbit().samples)
    assert main(["mixed", "--spec", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert 0 <= report["ratio"] <= 1 + 1e-6
    assert report["meta"]["purification_gauge"] == "parallel-transport"


def test_density_minimum_samples(tmp_path):
    pure = {"re": [[1, 0], [0, 0]]}
    other = {"re": [[0.5, 0.5], [0.5, 0.5]]}
    ok = write(tmp_path / "three.json", {"dt": 0.1, "samples": [pure, pure, other]})
    assert len(load_density_trajectory(ok)) == 3
    two = write(tmp_path / "two.json", {"dt": 0.1, "samples": [pure, pure]})
    with pytest.raises(SpecError):
        load_density_trajectory(two)


def test_density_trace_rejected(tmp_path, capsys):
    good = {"re": [[0.5, 0], [0, 0.5]]}
    bad = {"re": [[0.5, 0], [0, 0.4]]}
    path = write(tmp_path / "trace.json", {"dt": 0.1, "samples": [good, good, bad]})
    assert main(["mixed", "--spec", path]) == 2
    err = capsys.readouterr().err
    assert "sample 2" in err and "trace" in err
    nonherm = write(tmp_path / "nh.json", {"dt": 0.1, "samples": [good, {"re": [[0.5, 0.2], [0, 0.5]]}, good]})
    assert main(["mixed", "--spec", nonherm]) == 2
    assert "sample 1" in capsys.readouterr().err


# -- verify -------------------------------------------------------------------


def test_verify_mixed_suite(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "mixed", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"]
    assert {"name", "deviation", "tolerance", "passed"} <= set(report["checks"][0])


def test_verify_tolerance_override_fails(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "mixed", "--out", str(out), "--tolerance", "1e-300"]) == 1
    assert not json.loads(out.read_text())["passed"]


def test_steps_flag_validation(tmp_path):
    spec = gain_loss(tmp_path, "s", 0.2, 0.8, 0.4, grid={"t_max": 1.0})
    assert main(["evolve", "--spec", spec, "--out", str(tmp_path / "x.csv"), "--steps", "1"]) == 2
    assert main(["evolve", "--spec", spec, "--out", str(tmp_path / "x.csv"), "--steps", "10"]) == 0
    assert len(read_csv(tmp_path / "x.csv")[1]) == 11
    assert math.isfinite(read_csv(tmp_path / "x.csv")[1][-1, -1])
