import json
import os

import numpy as np
import pytest

from chiralkramers import cli
from chiralkramers.config import load_config, shipped_config
from chiralkramers.optics import energy_densities
from chiralkramers.output import atomic_write_text, read_csv_table


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_rates_reports_the_dissipative_ratio(tmp_path):
    out = tmp_path / "rates.json"
    assert run("rates", "paper-dissipative-left.cfg", "--out", out) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["ratio"] == pytest.approx(0.29, abs=0.02)
    assert doc["thermodynamics"]["heat_transfer"] == pytest.approx(np.log(doc["ratio"]), rel=1e-12)
    manifest = json.loads((tmp_path / "rates.json.manifest.json").read_text())
    assert manifest["config_hash"] == doc["config_hash"]


def test_calibrate_round_trip(tmp_path):
    out = tmp_path / "pinned.cfg"
    assert run("calibrate", "paper-achiral.cfg", "--barrier", "1.0kT", "--out", out) == cli.EXIT_OK
    text = out.read_text()
    assert "barrier_kt" not in text and "field_amplitude_v_per_m" in text
    rates = tmp_path / "rates.json"
    assert run("rates", out, "--out", rates) == cli.EXIT_OK
    barrier = json.loads(rates.read_text())["landscape"]["barrier_ab"]
    assert barrier / 1.380649e-23 / 295.0 == pytest.approx(1.0, rel=1e-9)


def test_sweep_has_a_zero_helicity_row(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "paper-achiral.cfg", "--mode", "dissipative", "--grid", "5,4", "--out", out) == cli.EXIT_OK
    config_hash, rows = read_csv_table(out)
    assert len(rows) == 20 and len(config_hash) == 64
    zero = [r for r in rows if float(r["helicity_plus"]) == 0.0]
    assert len(zero) == 4 and all(float(r["force_ratio"]) == 0.0 for r in zero)


def test_field_map_columns(tmp_path):
    out = tmp_path / "map.csv"
    assert run("field-map", "paper-reactive.cfg", "--grid", "8,6", "--out", out) == cli.EXIT_OK
    _, rows = read_csv_table(out)
    assert len(rows) == 48
    model = load_config("paper-reactive.cfg").force_model()
    q = np.array([float(r["q_m"]) for r in rows])
    z = np.array([float(r["z_m"]) for r in rows])
    d = energy_densities(model.config, q, z)
    np.testing.assert_array_equal([float(r["w_electric_j_per_m3"]) for r in rows], d.w_electric)
    np.testing.assert_array_equal([float(r["chiral_density"]) for r in rows], d.chiral_density)


def test_validation_failure_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(shipped_config("paper-reactive.cfg").read_text().replace("radius_nm = 20", "radius_nm = abc"))
    assert run("rates", bad) == cli.EXIT_VALIDATION
    assert "radius_nm" in capsys.readouterr().err
    assert run("rates", tmp_path / "missing.cfg") == cli.EXIT_VALIDATION
    with pytest.raises(SystemExit) as err:
        run("rates")
    assert err.value.code == cli.EXIT_VALIDATION


def test_single_well_exits_two(tmp_path):
    flat = tmp_path / "flat.cfg"
    flat.write_text(shipped_config("paper-achiral.cfg").read_text().replace("axis_angle_pi = 0.49945", "axis_angle_pi = 0.5"))
    assert run("rates", flat) == cli.EXIT_NUMERICAL


def test_simulate_reruns_are_bitwise_identical(tmp_path):
    args = ["simulate", "paper-dissipative-left.cfg", "--preset", "desk", "--trajectories", 8, "--steps", 400,
            "--store", 1, "--stride", 100, "--backend", "numpy"]
    assert run(*args, "--out", tmp_path / "a") == cli.EXIT_OK
    assert run(*args, "--chunk-size", 3, "--out", tmp_path / "b") == cli.EXIT_OK
    for name in ("axial_histogram.csv", "radial_axial_histogram.csv", "occupancy.csv", "events.csv",
                 "trajectories/trajectory_000000.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert set(summary["members"]) == {"left", "right"}


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"

    def broken(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", broken)
    with pytest.raises(OSError):
        atomic_write_text(target, "payload")
    assert list(tmp_path.iterdir()) == []
