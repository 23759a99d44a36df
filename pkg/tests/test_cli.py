import json
import subprocess
import sys

import numpy as np
import pytest

from biphoton.cli import build_parser, main
from biphoton.spectral import SpectralMatrix, correlation_coefficient
from biphoton.sweep import EntropySeries

SMALL = ["--grid-n", "96"]


def run(argv, tmp_path, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_spectrum_outputs(tmp_path):
    code, out = run(["spectrum", "--temperature", "300", *SMALL], tmp_path)
    assert code == 0
    man = manifest(out)
    assert man["outputs"] == ["spectrum.csv", "spectrum.json", "spectrum.svg"]
    assert man["command"] == "spectrum" and man["evaluator"] == "analytic"
    assert man["params"]["temperature"] == 300 and man["grid"]["n_points"] == 96
    assert man["duration_s"] >= 0
    assert sorted(p.name for p in out.iterdir()) == sorted(man["outputs"] + ["manifest.json"])
    m = SpectralMatrix.from_csv(out / "spectrum.csv")
    assert m.amplitude.shape == (96, 96)
    assert correlation_coefficient(m) > 0


def test_zero_temperature_ridge(tmp_path):
    code, out = run(["spectrum", "--temperature", "0", *SMALL], tmp_path)
    assert code == 0
    assert correlation_coefficient(SpectralMatrix.from_csv(out / "spectrum.csv")) < -0.9


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"temperature": 120, "tau": 0.3, "scheme": "counter"}))
    code, out = run(["spectrum", "--config", str(cfg), "--tau", "0.4", *SMALL], tmp_path)
    assert code == 0
    p = manifest(out)["params"]
    assert (p["temperature"], p["tau"], p["scheme"], p["gamma3N_ratio"]) == (120, 0.4, "counter", 5.0)


def test_check_analytic(tmp_path):
    code, _ = run(["spectrum", "--evaluator", "quadrature", "--check-analytic",
                   "--temperature", "300", "--grid-n", "24"], tmp_path, "q")
    assert code == 0
    code, out = run(["spectrum", "--evaluator", "bare", "--check-analytic",
                     "--temperature", "300", "--grid-n", "24"], tmp_path, "b")
    assert code == 3
    assert not (out / "manifest.json").exists()


def test_schmidt_outputs(tmp_path):
    code, out = run(["schmidt", "--scheme", "counter", "--temperature", "500", *SMALL], tmp_path)
    assert code == 0
    man = manifest(out)
    expected = ["eigenvalues.csv", "schmidt.json", "modes.json"]
    for k in range(3):
        expected += [f"mode{k}_signal.csv", f"mode{k}_idler.csv"]
    expected += ["eigenvalues.svg", "modes_signal.svg", "modes_idler.svg"]
    assert man["outputs"] == expected
    lam = np.loadtxt(out / "eigenvalues.csv", delimiter=",", skiprows=1)
    assert lam.shape == (10, 2)
    assert np.all(np.diff(lam[:, 1]) <= 0)
    summary = json.loads((out / "schmidt.json").read_text())
    assert summary["entropy_bits"] == man["entropy_bits"] > 0


def test_schmidt_temperature_ordering(tmp_path):
    lam = {}
    for T in (50, 500):
        code, out = run(["schmidt", "--temperature", str(T), *SMALL], tmp_path, f"T{T}")
        assert code == 0
        lam[T] = json.loads((out / "schmidt.json").read_text())["eigenvalues"][0]
    assert lam[50] > lam[500]


def test_schmidt_separable_config(tmp_path):
    # a very short pulse at zero temperature flattens the sum-frequency envelope
    # and leaves a product state
    cfg = tmp_path / "sep.json"
    cfg.write_text(json.dumps({"temperature": 0, "tau": 1e-3, "gamma3N_ratio": 1.0}))
    code, out = run(["schmidt", "--config", str(cfg), "--range", "10", "--grid-n", "128"], tmp_path)
    assert code == 0
    summary = json.loads((out / "schmidt.json").read_text())
    assert summary["eigenvalues"][0] == pytest.approx(1.0, abs=1e-9)
    assert summary["entropy_bits"] == pytest.approx(0.0, abs=1e-9)


def test_sweep_fixed_range(tmp_path):
    code, out = run(["sweep", "--axis", "tau", "--values", "0.2", "0.3", "--mode", "fixed_range",
                     *SMALL], tmp_path)
    assert code == 0
    man = manifest(out)
    assert man["outputs"] == ["sweep.csv", "sweep.json", "sweep.svg"]
    assert man["failed_rows"] == 0
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header == "axis_value,S,a,beta,a_ci95,beta_ci95,grid_n,range"


def test_sweep_asymptotic_error_bars(tmp_path):
    code, out = run(["sweep", "--axis", "temperature", "--values", "100", "300",
                     "--ranges", "25", "50", "75", "100", *SMALL], tmp_path)
    assert code == 0
    data = json.loads((out / "sweep.json").read_text())
    assert all(r["a_ci95"] is not None and r["a"] >= max(r["series"]["S"]) for r in data["rows"])
    assert "<line" in (out / "sweep.svg").read_text()


def test_sweep_partial_failure(tmp_path):
    code, out = run(["sweep", "--axis", "temperature", "--values", "-5", "100",
                     "--mode", "fixed_range", "--grid-n", "48"], tmp_path)
    assert code == 4
    assert manifest(out)["failed_rows"] == 1


def write_series(path, R, S):
    EntropySeries(R, S).to_csv(path)


def test_fit_noiseless(tmp_path):
    R = np.arange(10.0, 151.0, 20.0)
    write_series(tmp_path / "s.csv", R, 1.7 * (1 - np.exp(-0.04 * R)))
    code, out = run(["fit", str(tmp_path / "s.csv")], tmp_path)
    assert code == 0
    rep = json.loads((out / "fit.json").read_text())
    assert rep["a"] == pytest.approx(1.7, rel=1e-6) and rep["beta"] == pytest.approx(0.04, rel=1e-6)
    assert manifest(out)["outputs"] == ["fit.json"]


def test_fit_errors(tmp_path):
    write_series(tmp_path / "three.csv", [1, 2, 3], [0.1, 0.2, 0.3])
    assert run(["fit", str(tmp_path / "three.csv")], tmp_path)[0] == 2
    write_series(tmp_path / "flat.csv", [1, 2, 3, 4], [0.4] * 4)
    assert run(["fit", str(tmp_path / "flat.csv")], tmp_path)[0] == 5
    assert run(["fit", str(tmp_path / "missing.csv")], tmp_path)[0] == 2


@pytest.mark.parametrize("argv", [
    ["spectrum", "--temperature", "-3"],
    ["spectrum", "--gamma3N-ratio", "0.5"],
    ["spectrum", "--grid-n", "1"],
    ["sweep", "--axis", "tau", "--values", "0.3", "0.2", "0.4"],
])
def test_config_errors(tmp_path, argv, capsys):
    assert run(argv, tmp_path)[0] == 2
    assert capsys.readouterr().err.startswith("error:")


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"temperatur": 100}))
    assert run(["spectrum", "--config", str(cfg)], tmp_path)[0] == 2


def test_unknown_flag_is_fatal(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--colour", "red"])
    assert exc.value.code == 2


@pytest.mark.parametrize("command", ["spectrum", "schmidt", "sweep", "fit"])
def test_help_lists_flags(command):
    sub = build_parser()._subparsers._group_actions[0].choices[command]
    text = sub.format_help()
    for action in sub._actions:
        for opt in action.option_strings:
            assert opt in text
    if command != "fit":
        for flag in ("--config", "--out", "--grid-n", "--range", "--scheme", "--evaluator", "--reproducible"):
            assert flag in text


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "biphoton.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "spectrum" in proc.stdout


def _snapshot(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


@pytest.mark.parametrize("argv", [
    ["spectrum", "--temperature", "250", "--scheme", "counter", *SMALL],
    ["schmidt", "--temperature", "400", *SMALL],
    ["sweep", "--axis", "gamma3N_ratio", "--values", "3", "6", "--ranges", "25", "50", "75", "100", *SMALL],
])
def test_reproducible_runs_are_byte_identical(tmp_path, monkeypatch, argv):
    snaps = []
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        monkeypatch.chdir(tmp_path / d)
        assert main([*argv, "--reproducible", "--out", "out"]) == 0
        snaps.append(_snapshot(tmp_path / d / "out"))
    assert snaps[0].keys() == snaps[1].keys()
    for name in snaps[0]:
        assert snaps[0][name] == snaps[1][name], name
