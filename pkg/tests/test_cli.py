import csv
import json

import pytest

from fogplace.cli import DISTRIBUTION_COLUMNS, POWER_COLUMNS, main

SMALL = {"instance": {"n_devices": 6, "n_onus": 2}, "rates": {"start_mbps": 0.5, "end_mbps": 1.5, "step_mbps": 0.5}}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _read_csv(path):
    lines = path.read_text().splitlines()
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
    return list(csv.DictReader(lines))


def test_solve_fog_iot(capsys):
    assert main(["solve", "--scenario", "fog-iot", "--rate-mbps", "0.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["breakdown"]["grand_total"] == pytest.approx(40.78, abs=0.01)
    assert set(doc["layers"].values()) == {"IoT"}
    assert doc["status"] == "Optimal"


def test_solve_cloud_gp(capsys):
    assert main(["solve", "--scenario", "cloud-gp", "--rate-mbps", "0.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["breakdown"]["network_total"] > 0
    assert set(doc["layers"].values()) == {"CloudDC"}


def test_solve_missing_config(tmp_path, capsys):
    missing = tmp_path / "absent.json"
    assert main(["solve", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_solve_bad_field(tmp_path, capsys):
    assert main(["solve", "--config", _write(tmp_path, {"wireless": {"alfa": 2}})]) == 1
    assert "wireless.alfa" in capsys.readouterr().err


def test_solve_infeasible_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"scenarios": [{"name": "af", "allowed_layers": ["AccessFog"]}]})
    assert main(["solve", "--config", cfg, "--rate-mbps", "1.0"]) == 2
    assert json.loads(capsys.readouterr().out)["status"] == "Infeasible"


def test_solve_replay_round_trip(tmp_path):
    dump = tmp_path / "inst.json"
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["--scenario", "fog", "--no-timestamp"]
    assert main(["solve", *args, "--rate-mbps", "1.5", "--seed", "4", "--dump-instance", str(dump), "--out", str(a)]) == 0
    assert main(["solve", *args, "--instance", str(dump), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_brute_method(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    main(["solve", "--config", cfg, "--scenario", "fog", "--rate-mbps", "1.5"])
    bnb = json.loads(capsys.readouterr().out)
    main(["solve", "--config", cfg, "--scenario", "fog", "--rate-mbps", "1.5", "--method", "brute"])
    brute = json.loads(capsys.readouterr().out)
    assert bnb["objective"] == pytest.approx(brute["objective"], rel=1e-9)


def test_sweep_outputs(tmp_path):
    out = tmp_path / "res"
    assert main(["sweep", "--config", _write(tmp_path, SMALL), "--out", str(out), "--no-timestamp"]) == 0
    power = _read_csv(out / "power.csv")
    assert list(power[0]) == POWER_COLUMNS
    assert len(power) == 4 * 3
    dist = _read_csv(out / "distribution.csv")
    assert list(dist[0]) == DISTRIBUTION_COLUMNS
    sums = {}
    for row in dist:
        key = row["scenario"], row["rate_mbps"]
        sums[key] = sums.get(key, 0.0) + float(row["fraction"])
    assert len(sums) == 12 and all(v == pytest.approx(1.0) for v in sums.values())
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["scenarios"]) == {"cloud-gp", "cloud-sp", "fog", "fog-iot"}
    assert "avg_saving" in summary["scenarios"]["cloud-sp"]
    assert {r["metric"] for r in summary["calibration"]} == {"fog-iot:at_lowest_rate", "fog:max", "cloud-sp:avg"}
    assert "generated" not in summary
    assert (out / "power.csv").read_bytes().count(b"\r\n") == 13


def test_sweep_timestamp_header(tmp_path):
    out = tmp_path / "res"
    main(["sweep", "--config", _write(tmp_path, SMALL), "--out", str(out)])
    assert (out / "power.csv").read_text().startswith("# generated ")


def test_sweep_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["sweep", "--config", _write(tmp_path, SMALL), "--out", str(blocker / "sub")]) == 1


def test_validate_default():
    assert main(["validate"]) == 0


def test_validate_nonpaper_distance(tmp_path, capsys):
    cfg = _write(tmp_path, {"instance": {"distance_range": [60, 70]}})
    assert main(["validate", "--config", cfg]) == 1
    out = capsys.readouterr().out
    assert "10-50 m" in out
    assert main(["validate", "--config", cfg, "--allow-nonpaper"]) == 0


def test_validate_negative_idle(tmp_path, capsys):
    cfg = _write(tmp_path, {"profiles": {"processing": {"gp_server": {"p_idle": -5}}}})
    assert main(["validate", "--config", cfg]) == 1
    assert "profiles.processing.gp_server.p_idle" in capsys.readouterr().out


def test_config_from_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FOGPLACE_CONFIG", _write(tmp_path, {"instance": {"n_devices": 2, "n_onus": 1}}))
    assert main(["solve", "--scenario", "fog"]) == 0
    assert len(json.loads(capsys.readouterr().out)["placement"]["assignment"]) == 2
