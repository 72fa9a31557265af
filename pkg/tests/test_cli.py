import csv
import io
import json
import math

import numpy as np
import pytest

from qbm import cli
from conftest import oscillator_response


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, raw = line[2:].partition(": ")
            meta[key] = json.loads(raw)
        else:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return meta, rows


def col(rows, name):
    return np.array([float(r[name]) for r in rows])


@pytest.fixture
def bath_file(tmp_path):
    w = np.linspace(0.05, 5.0, 200)
    path = tmp_path / "bath.csv"
    np.savetxt(path, np.column_stack([w, oscillator_response(w)]), delimiter=",",
               header="omega,im_alpha", comments="")
    return path


def test_kernels_match_closed_form(capsys):
    code, out, _ = run(capsys, "kernels", "--gamma", "1", "--temp", "10", "--thermal", "classical",
                       "--t-start", "0.1", "--t-end", "10", "--t-points", "3", "--t-scale", "log")
    assert code == 0
    meta, rows = parse_csv(out)
    assert len(rows) == 3
    s, sc = col(rows, "s"), col(rows, "s_closed")
    assert np.all(np.abs(s - sc) / sc < 1e-6)
    np.testing.assert_allclose(col(rows, "c"), col(rows, "c_closed"), rtol=1e-6)
    assert all(r["status"] == "ok" for r in rows)
    assert meta["command"] == "kernels"
    assert meta["scenario"]["thermal"] == "classical"
    assert meta["tolerances"]["rel_tol"] == 1e-9


def test_kernels_no_dissipation_exact(capsys):
    code, out, _ = run(capsys, "kernels", "--bath", "none", "--temp", "2.5", "--mass", "2",
                       "--t-end", "3", "--t-points", "4", "--precision", "17")
    assert code == 0
    _, rows = parse_csv(out)
    t = col(rows, "t")
    assert list(col(rows, "s")) == [2.5 * x * x / 2 for x in t]


def test_kernels_tabulated_has_no_closed_columns(capsys, bath_file):
    code, out, _ = run(capsys, "kernels", "--bath", f"tabulated:{bath_file}", "--t-points", "3")
    assert code == 0
    _, rows = parse_csv(out)
    assert "s_closed" not in rows[0]


@pytest.mark.parametrize("argv", [
    ["--t-points", "1"],
    ["--t-start", "2", "--t-end", "1"],
    ["--t-scale", "log", "--t-start", "0"],
    ["--bath", "quartic"],
    ["--sigma1", "0"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, "kernels", *argv)
    assert code == 2
    assert out == ""
    assert "error" in err


def test_attenuation_no_dissipation_columns_identical(capsys):
    code, out, _ = run(capsys, "attenuation", "--bath", "none", "--t-end", "1e6", "--t-points", "21",
                       "--precision", "17")
    assert code == 0
    _, rows = parse_csv(out)
    np.testing.assert_allclose(col(rows, "a"), col(rows, "a_no_dissipation"), rtol=1e-13)
    assert col(rows, "a")[-1] == pytest.approx(math.exp(-10), rel=1e-6)


def test_attenuation_weak_ohmic_tracks_no_dissipation(capsys):
    # tau_d = 0.1 at sigma1 = 1, d = 10, kT = 1; gamma tau_d = 1e-3.  The high-T
    # kernels are the classical thermal mode; full coth adds a zero-point term of ~1e-3
    code, out, _ = run(capsys, "attenuation", "--gamma", "1e-2", "--thermal", "classical",
                       "--t-start", "0", "--t-end", "1", "--t-points", "51")
    assert code == 0
    _, rows = parse_csv(out)
    assert np.max(np.abs(col(rows, "a") - col(rows, "a_no_dissipation"))) < 1e-3


def test_attenuation_at_zero_temperature_omits_free_column(capsys):
    code, out, _ = run(capsys, "attenuation", "--bath", "none", "--temp", "0", "--t-points", "3")
    assert code == 0
    _, rows = parse_csv(out)
    assert "a_no_dissipation" not in rows[0]
    np.testing.assert_array_equal(col(rows, "a"), 1.0)


def test_spread_schiff(capsys):
    code, out, _ = run(capsys, "spread", "--bath", "none", "--temp", "0", "--t-end", "2",
                       "--t-points", "5", "--precision", "17")
    assert code == 0
    _, rows = parse_csv(out)
    t = col(rows, "t")
    np.testing.assert_allclose(col(rows, "w2"), 1 + t**2 / 4, rtol=1e-15)


def test_interference_at_zero_lag(capsys):
    code, out, _ = run(capsys, "interference", "--bath", "none", "--time", "0")
    assert code == 0
    meta, rows = parse_csv(out)
    assert meta["attenuation"] == 1.0
    assert len(rows) == 201
    assert meta["measured_fringe_ratio"] == pytest.approx(1.0, abs=1e-12)


def test_interference_metadata_ratio(capsys):
    code, out, _ = run(capsys, "interference", "--bath", "none", "--time", "0.1",
                       "--x-min", "-15", "--x-max", "15", "--x-points", "301")
    assert code == 0
    meta, rows = parse_csv(out)
    assert meta["measured_fringe_ratio"] == pytest.approx(meta["attenuation"], abs=1e-10)
    assert min(col(rows, "P")) >= 0


def test_oracle_on_tabulated_bath(capsys, bath_file):
    code, out, _ = run(capsys, "oracle", "--bath", f"tabulated:{bath_file}", "--sigma2", "0.5",
                       "--time", "1.5", "--x-min", "-6", "--x-max", "6", "--x-points", "24")
    assert code == 0
    meta, rows = parse_csv(out)
    assert len(rows) == 24 * 24
    assert max(col(rows, "abs_err")) < 1e-4
    assert meta["linf"] < 1e-4


def test_oracle_rejects_divergent_variance(capsys):
    code, out, err = run(capsys, "oracle", "--sigma2", "0.5")
    assert code == 2
    assert "tabulated" in err


def test_oracle_rejects_ideal_second_slit(capsys, bath_file):
    code, _, err = run(capsys, "oracle", "--bath", f"tabulated:{bath_file}")
    assert code == 2
    assert "sigma2" in err


def test_decoherence_time_record(capsys):
    code, out, _ = run(capsys, "decoherence-time", "--temp", "1", "--sigma1", "1", "--d", "10")
    assert code == 0
    _, rows = parse_csv(out)
    assert len(rows) == 1
    r = rows[0]
    assert float(r["tau_d"]) == pytest.approx(0.1)
    assert r["d_gg_sigma1"] == "true"
    assert r["d_gg_lambda_bar"] == "true"
    assert float(r["long_time_rate"]) == pytest.approx(100.0)


def test_decoherence_time_needs_temperature(capsys):
    code, _, _ = run(capsys, "decoherence-time", "--temp", "0")
    assert code == 2


def test_scenario_file_and_flag_precedence(tmp_path, capsys):
    path = tmp_path / "run.ini"
    path.write_text("# sweep\nbath = none\ntemp = 3\nt_points = 3\nt-end = 2\n")
    code, out, _ = run(capsys, "kernels", "--scenario", str(path), "--temp", "4", "--precision", "17")
    assert code == 0
    meta, rows = parse_csv(out)
    assert meta["scenario"]["temp"] == 4.0
    assert meta["scenario"]["t-points"] == 3
    assert col(rows, "s")[-1] == 16.0


def test_scenario_file_unknown_key(tmp_path, capsys):
    path = tmp_path / "run.ini"
    path.write_text("temperature = 3\n")
    code, _, err = run(capsys, "kernels", "--scenario", str(path))
    assert code == 2
    assert "temperature" in err


def test_environment_overrides_between_file_and_flags(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("rel-tol = 1e-5\nabs-tol = 1e-9\n")
    env = {"QBM_REL_TOL": "1e-7", "QBM_MAX_PANELS": "500"}
    opts = cli.resolve_options({"scenario": str(path)}, env)
    assert (opts["rel-tol"], opts["abs-tol"], opts["max-panels"]) == (1e-7, 1e-9, 500)
    opts = cli.resolve_options({"scenario": str(path), "rel_tol": 1e-8}, env)
    assert opts["rel-tol"] == 1e-8


def test_bad_environment_value(monkeypatch, capsys):
    monkeypatch.setenv("QBM_MAX_PANELS", "many")
    code, _, _ = run(capsys, "kernels")
    assert code == 2


def test_nonconvergence_exit_1_with_partial_rows(capsys):
    code, out, err = run(capsys, "kernels", "--temp", "0", "--t-end", "5", "--t-points", "2",
                         "--max-panels", "3")
    assert code == 1
    _, rows = parse_csv(out)
    assert len(rows) == 2
    assert rows[-1]["status"] == "nonconverged"
    assert "converge" in err


def test_json_mirrors_csv(capsys):
    argv = ["spread", "--bath", "none", "--t-points", "4"]
    _, csv_out, _ = run(capsys, *argv)
    code, json_out, _ = run(capsys, *argv, "--format", "json")
    assert code == 0
    doc = json.loads(json_out)
    meta, rows = parse_csv(csv_out)
    assert doc["columns"] == list(rows[0].keys())
    assert len(doc["rows"]) == len(rows)
    assert doc["metadata"]["scenario"] == meta["scenario"]
    np.testing.assert_allclose([r[3] for r in doc["rows"]], col(rows, "w2"), rtol=1e-11)


def test_out_file(tmp_path, capsys):
    target = tmp_path / "o.csv"
    code, out, _ = run(capsys, "spread", "--bath", "none", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().count("\n") > 11


@pytest.mark.parametrize("command", cli.SUBCOMMANDS)
def test_byte_identical_reruns(command, capsys, bath_file):
    argv = [command, "--bath", f"tabulated:{bath_file}", "--sigma2", "0.5", "--t-start", "0.1",
            "--t-points", "3", "--x-points", "9", "--x-min", "-3", "--x-max", "3"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
