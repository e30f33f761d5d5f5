import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gauge_me import cli
from gauge_me.errors import QuadratureError
from gauge_me.gauge import MULTIPOLAR
from gauge_me.rates import RateSet, a_plus_closed_form
from gauge_me.scenarios import PRESET_NAMES, parse_scenario, preset

W0 = 3.7e15
BENCH_SCENARIO = f"name = bench\nomega0 = {W0!r}\ngamma = 1e7\ndelta_t_s = {1e4 / W0!r}\n"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def bench_file(tmp_path):
    path = tmp_path / "bench.txt"
    path.write_text(BENCH_SCENARIO, encoding="utf-8")
    return str(path)


# --- rates / steady ---------------------------------------------------------

def test_rates_rotating_wave_exact_zero(capsys):
    code, out, _ = run(capsys, "rates", "--scenario", "lab_ion", "--gauge", "rotating")
    report = json.loads(out)
    assert code == 0
    assert report["A_plus"] == 0.0 and report["B_abs"] == 0.0
    assert report["perturbative"] is True


def test_rates_multipolar(capsys):
    code, out, _ = run(capsys, "rates", "--gauge", "multipolar")
    ref = a_plus_closed_form(preset("lab_ion").params, MULTIPOLAR)
    assert code == 0
    assert json.loads(out)["A_plus"] == pytest.approx(ref, rel=1e-2)
    assert json.loads(out)["A_plus"] == pytest.approx(4.3e6, rel=1e-2)


def test_invalid_gauge_is_usage_error(capsys):
    code, _, err = run(capsys, "rates", "--gauge", "coulomb")
    assert code == cli.EXIT_USAGE
    assert "coulomb" in err


def test_missing_subcommand_is_usage_error(capsys):
    assert run(capsys)[0] == cli.EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == cli.EXIT_USAGE


def test_steady_presets(capsys):
    _, out, _ = run(capsys, "steady", "--scenario", "quantum_dot")
    assert 8400 / 3 <= json.loads(out)["I_ss_total"] <= 8400 * 3
    _, out, _ = run(capsys, "steady", "--scenario", "lab_ion_close")
    assert json.loads(out)["I_ss_total"] == pytest.approx(47.09, rel=1e-2)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_steady_rotating_wave_zero(capsys, name):
    code, out, _ = run(capsys, "steady", "--scenario", name, "--gauge", "rotating")
    assert code == 0
    report = json.loads(out)
    assert report["I_ss_total"] == 0.0 and report["rho22_ss"] == 0.0


def test_csv_report(capsys):
    code, out, _ = run(capsys, "steady", "--format", "csv")
    rows = table(out)
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["I_ss_total"]) == pytest.approx(1.4127, rel=1e-3)


def test_custom_alpha_family(capsys):
    code, out, _ = run(capsys, "rates", "--alpha-family", "constant:1")
    code2, out2, _ = run(capsys, "rates", "--gauge", "multipolar")
    assert code == code2 == 0
    assert json.loads(out)["A_plus"] == pytest.approx(json.loads(out2)["A_plus"], rel=1e-10)
    assert run(capsys, "rates", "--alpha-family", "wobble")[0] == cli.EXIT_VALIDATION


# --- scenario handling ----------------------------------------------------------

def test_scenario_file_and_validation_errors(capsys, tmp_path, bench_file):
    assert run(capsys, "rates", "--scenario", bench_file)[0] == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("omega0 = 3.7e15\ngamma = 1e7\n", encoding="utf-8")
    code, _, err = run(capsys, "rates", "--scenario", str(bad))
    assert code == cli.EXIT_VALIDATION
    assert "delta_t_s" in err
    assert run(capsys, "rates", "--scenario", str(tmp_path / "nope.txt"))[0] == cli.EXIT_VALIDATION


def test_preset_dump_parses_back(capsys):
    code, out, _ = run(capsys, "preset-dump", "lab_ion")
    assert code == 0
    assert parse_scenario(out) == preset("lab_ion")
    code, out, _ = run(capsys, "preset-dump")
    assert code == 0 and out.count("name = ") == len(PRESET_NAMES)
    assert run(capsys, "preset-dump", "nope")[0] == cli.EXIT_USAGE


# --- sweep ------------------------------------------------------------------------

def test_sweep_rotating_wave_a_minus_flat(capsys, bench_file):
    code, out, _ = run(capsys, "sweep", "--scenario", bench_file, "--gauge", "rotating",
                       "--var", "omega_max", "--from", str(10 * W0), "--to", str(1e4 * W0),
                       "--points", "4", "--log")
    rows = table(out)
    assert code == 0 and len(rows) == 4
    assert list(rows[0]) == ["omega_max_rad_s", "A_minus_per_s", "A_plus_per_s", "B_abs_per_s",
                             "I_ss_per_s", "ratio", "error"]
    for row in rows:
        assert 0.9 <= float(row["A_minus_per_s"]) / 1e7 <= 1.1
        assert float(row["A_plus_per_s"]) == 0.0 and row["error"] == ""


def test_sweep_emission_tracks_two_a_plus(capsys):
    # I_ss = 2 A_minus A_plus / (A_minus + A_plus) ~ 2 A_plus when A_plus << A_minus
    code, out, _ = run(capsys, "sweep", "--scenario", "lab_ion", "--outputs", "A_plus,I_ss",
                       "--from", str(10 * W0), "--to", str(1e4 * W0), "--points", "7", "--log")
    assert code == 0
    for row in table(out):
        two_a_plus = 2 * float(row["A_plus_per_s"])
        assert abs(float(row["I_ss_per_s"]) - two_a_plus) <= 1e-4 * two_a_plus


@pytest.mark.parametrize("grid", [
    ["--points", "0", "--from", "1", "--to", "2"],
    ["--points", "3", "--from", "2", "--to", "1"],
    ["--points", "1", "--from", "1", "--to", "2"],
    ["--points", "3", "--to", "2"],
    ["--points", "3", "--from", "0", "--to", "2", "--log"],
])
def test_sweep_bad_grids_are_usage_errors(capsys, grid):
    assert run(capsys, "sweep", *grid)[0] == cli.EXIT_USAGE


def test_sweep_records_point_failures(capsys):
    # delta_t = 1e-14 s puts omega0 * delta_t below the supported range
    code, out, _ = run(capsys, "sweep", "--var", "delta_t", "--from", "1e-14", "--to", "1e-8",
                       "--points", "3", "--log")
    rows = table(out)
    assert code == 0 and len(rows) == 3
    assert rows[0]["error"].startswith("DomainError")
    assert math.isnan(float(rows[0]["A_plus_per_s"]))
    assert rows[1]["error"] == rows[2]["error"] == ""


def test_sweep_omega_min(capsys):
    code, out, _ = run(capsys, "sweep", "--var", "omega_min", "--from", "0", "--to", "3.7e12",
                       "--points", "2", "--outputs", "A_plus")
    rows = table(out)
    assert code == 0
    a0, a1 = (float(r["A_plus_per_s"]) for r in rows)
    assert abs(a1 - a0) <= 1e-2 * a0


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--from", "3.7e16", "--to", "3.7e16", "--points", "1",
                       "--format", "json")
    records = json.loads(out)
    assert code == 0 and len(records) == 1
    assert records[0]["omega_max_rad_s"] == 3.7e16


def test_sweep_output_byte_identical(tmp_path):
    args = ["sweep", "--from", "3.7e16", "--to", "3.7e19", "--points", "5", "--log"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# --- spectral ---------------------------------------------------------------------

def test_spectral_rotating_f_plus_zero(capsys):
    code, out, _ = run(capsys, "spectral", "--gauge", "rotating", "--omega0", str(W0),
                       "--from", "1e13", "--to", "1e19", "--points", "25", "--log")
    rows = table(out)
    assert code == 0
    assert all(float(r["f_plus"]) == 0.0 for r in rows)


def test_spectral_multipolar_slope(capsys):
    code, out, _ = run(capsys, "spectral", "--gauge", "multipolar", "--omega0", str(W0),
                       "--from", str(1e3 * W0), "--to", str(1e4 * W0), "--points", "2", "--log")
    rows = table(out)
    w = [float(r["omega_k_rad_s"]) for r in rows]
    f = [float(r["f_minus"]) for r in rows]
    slope = math.log(f[1] / f[0]) / math.log(w[1] / w[0])
    assert slope == pytest.approx(1.0, abs=2e-3)


def test_spectral_singular_point_entry(capsys):
    code, out, _ = run(capsys, "spectral", "--gauge", "minimal", "--omega0", str(W0),
                       "--from", str(0.5 * W0), "--to", str(1.5 * W0), "--points", "3")
    rows = table(out)
    assert code == 0
    assert rows[1]["error"].startswith("SingularPointError")
    assert math.isnan(float(rows[1]["f_minus"]))
    assert float(rows[1]["f_plus"]) == pytest.approx(0.25)
    assert rows[0]["error"] == rows[2]["error"] == ""


def test_spectral_wavelength_input(capsys):
    code, out, _ = run(capsys, "spectral", "--wavelength-nm", "950",
                       "--from", "1e15", "--to", "1e15", "--points", "1")
    assert code == 0 and len(table(out)) == 1


# --- evolve -----------------------------------------------------------------------

def test_evolve_csv(capsys):
    code, out, err = run(capsys, "evolve", "--gauge", "rotating", "--t-final", "5e-7",
                         "--points", "6")
    rows = table(out)
    assert code == 0 and len(rows) == 6
    assert list(rows[0]) == ["time_s", "rho11", "rho22", "rho12_re", "rho12_im"]
    t = np.array([float(r["time_s"]) for r in rows])
    p = np.array([float(r["rho22"]) for r in rows])
    a_minus = json.loads(run(capsys, "rates", "--gauge", "rotating")[1])["A_minus"]
    np.testing.assert_allclose(p, np.exp(-a_minus * t), rtol=1e-6)
    assert "frame=rotating" in err


def test_evolve_rk_refuses_lab_frequencies(capsys):
    code, _, err = run(capsys, "evolve", "--t-final", "5e-7", "--initial", "plus",
                       "--method", "rk")
    assert code == cli.EXIT_VALIDATION and "exact" in err


# --- lindblad-check ---------------------------------------------------------------

def test_lindblad_check_report(capsys):
    code, out, _ = run(capsys, "lindblad-check", "--gauge", "multipolar")
    report = json.loads(out)
    assert code == 0 and report["holds"] is True
    assert report["lambda_1"] >= report["lambda_2"] >= 0


def test_lindblad_check_scan(capsys, bench_file):
    code, out, _ = run(capsys, "lindblad-check", "--scenario", bench_file, "--gauge", "multipolar",
                       "--from", str(10 * W0), "--to", str(1e4 * W0), "--points", "4", "--log")
    rows = table(out)
    assert code == 0 and len(rows) == 4
    assert list(rows[0]) == ["omega_max_rad_s", "A_plus", "A_minus", "B_bound_abs", "ratio"]
    assert all(float(r["ratio"]) >= 1 for r in rows)
    code, _, _ = run(capsys, "lindblad-check", "--gauge", "rotating",
                     "--from", "1e16", "--to", "1e17", "--points", "2")
    assert code == cli.EXIT_VALIDATION


# --- trajectories -----------------------------------------------------------------

def test_trajectories_rotating_wave(capsys, tmp_path):
    summary = tmp_path / "summary.json"
    code, out, _ = run(capsys, "trajectories", "--gauge", "rotating", "--n-traj", "3000",
                       "--seed", "5", "--summary", str(summary))
    assert code == 0
    stats = json.loads(summary.read_text())
    rows = table(out)
    assert len(rows) == stats["n_emissions"]
    assert list(rows[0]) == ["trajectory_id", "time_s", "channel"]
    z = abs(stats["mean_first_emission_s"] - stats["inverse_A_minus_s"])
    assert z <= 3 * stats["first_emission_stderr_s"]
    assert stats["max_abs_rho22_deviation"] < 0.05


def test_trajectories_summary_on_stderr(capsys):
    code, _, err = run(capsys, "trajectories", "--gauge", "rotating", "--n-traj", "10")
    assert code == 0 and "mean_first_emission_s" in json.loads(err)


def test_trajectories_byte_identical(tmp_path):
    args = ["trajectories", "--gauge", "multipolar", "--n-traj", "300", "--seed", "17",
            "--points", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_trajectories_zero_is_usage_error(capsys):
    assert run(capsys, "trajectories", "--n-traj", "0")[0] == cli.EXIT_USAGE


def test_trajectories_refuse_when_condition_fails(capsys, monkeypatch):
    monkeypatch.setattr(cli, "rate_set", lambda p, g: RateSet(1e7, 1.0, 1e4 + 0j, p.omega0))
    code, _, err = run(capsys, "trajectories", "--n-traj", "10")
    assert code == cli.EXIT_REFUSED
    assert "ratio = 0.1" in err


def test_numerical_error_exit_code(capsys, monkeypatch):
    def boom(p, g):
        raise QuadratureError("did not converge", error_estimate=1.0)

    monkeypatch.setattr(cli, "rate_set", boom)
    assert run(capsys, "rates")[0] == cli.EXIT_NUMERICAL


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gauge_me", "rates", "--gauge", "rotating"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["A_plus"] == 0.0
