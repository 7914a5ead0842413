import json

import pytest

from skgeom import cli

pytestmark = pytest.mark.filterwarnings("ignore:.*empirical power")

FAST = {"delta": 0.6, "alpha1": 5.5, "alpha2": 2.0}


def test_parse_snr_grid():
    assert cli.parse_snr_grid("10:20:5") == [10.0, 15.0, 20.0]
    assert cli.parse_snr_grid((0, 1, 0.25)) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert cli.parse_snr_grid("30") == [30.0]
    assert cli.parse_snr_grid("20:10:5") == []
    for bad in ("1:2", "a:b:c", "0:10:0"):
        with pytest.raises(cli.UsageError):
            cli.parse_snr_grid(bad)


def test_load_config(tmp_path):
    f = tmp_path / "exp.json"
    f.write_text(json.dumps({"mapping": ["rcasd", "bpam"], "snr": [20, 30, 10], "n_samples": 5000}))
    cfg = cli.load_config(str(f), {"seed": 9, "out": None})
    assert cfg.mapping == ("rcasd", "bpam") and cfg.seed == 9 and cfg.n_samples == 5000
    assert cfg.snr_grid() == [20.0, 30.0]
    assert cli.load_config(None, {"mapping": "snasu,rcasd"}).mapping == ("snasu", "rcasd")
    with pytest.raises(cli.UsageError):
        cli.load_config(None, {"mapping": "rcasd", "bogus": 1})
    with pytest.raises(cli.UsageError):
        cli.load_config(None, {})
    with pytest.raises(cli.UsageError):
        cli.load_config(None, {"mapping": "spiral"})
    with pytest.raises(cli.UsageError):
        cli.load_config(None, {"mapping": "rcasd", "params": {"delta": -1}})
    with pytest.raises(cli.UsageError):
        cli.load_config(None, {"mapping": "rcasd", "n_samples": 10})
    f.write_text("{not json")
    with pytest.raises(cli.UsageError):
        cli.load_config(str(f))


def test_csv_roundtrip(tmp_path):
    rows = [{"snr_db": 10.0, "mapping": "rcasd", "delta": 0.123456789, "extras": "a=1;b=2"},
            {"snr_db": 20.0, "mapping": "bpam"}]
    p = tmp_path / "x.csv"
    text = cli.write_csv(rows, str(p))
    assert text.splitlines()[0] == ",".join(cli.SWEEP_COLUMNS)
    back = cli.read_csv(str(p))
    assert back[0]["delta"] == 0.123457 and back[0]["extras"] == "a=1;b=2"
    assert back[1]["delta"] is None and back[1]["extras"] == ""
    assert cli.write_csv(back) == text


def test_baselines_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert cli.main(["baselines", "--snr", "0:30:30", "--out", str(out)]) == 0
    rows = cli.read_csv(str(out))
    assert rows[0]["opta_db"] == pytest.approx(2.00687, abs=1e-5)
    assert rows[1]["opta_db"] == pytest.approx(20.0029, abs=1e-4)
    assert rows[0]["bpam_db"] == pytest.approx(1.76091, abs=1e-5)
    assert cli.main(["baselines", "--snr", "0:0:1"]) == 0
    assert "snr_db,opta_db,bpam_db" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["sweep", "--mapping", "spiral"]) == 2
    assert cli.main(["sweep", "--mapping", "rcasd", "--params", "{bad"]) == 2
    assert cli.main(["baselines", "--out", str(tmp_path / "missing" / "x.csv")]) == 1
    assert cli.main(["sweep", "--config", str(tmp_path / "nope.json")]) == 1
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_sweep_with_given_parameters(tmp_path):
    out = tmp_path / "s.csv"
    code = cli.main(["sweep", "--mapping", "rcasd,bpam", "--snr", "30:40:10", "--samples", "2000",
                     "--params", json.dumps(FAST), "--out", str(out)])
    assert code == 0
    rows = cli.read_csv(str(out))
    assert [(r["snr_db"], r["mapping"]) for r in rows] == [(30, "rcasd"), (30, "bpam"), (40, "rcasd"), (40, "bpam")]
    r = rows[0]
    assert r["delta"] == 0.6 and r["anomaly_rate"] == 0.0
    assert abs(r["sdr_simulated_db"] - r["sdr_analytical_db"]) < 1.0
    assert rows[1]["sdr_simulated_db"] == pytest.approx(rows[1]["bpam_db"], abs=0.2)


def test_optimize_command(capsys):
    assert cli.main(["optimize", "--mapping", "rcasd", "--snr", "30"]) == 0
    rows = cli.read_csv(capsys.readouterr().out)
    assert rows[0]["delta"] == pytest.approx(0.6072, abs=1e-3)
    assert rows[0]["active"] == 1.0


def test_analyze_command(tmp_path, capsys):
    out = tmp_path / "k.csv"
    code = cli.main(["analyze", "--mapping", "rcasd", "--snr", "30", "--params", json.dumps(FAST),
                     "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "developable: True" in text and "lines_of_curvature: True" in text
    assert "canal margin" in text and "(safe)" in text
    rows = cli.read_csv(str(out))
    assert len(rows) == 144
    # curvature falls as the folds spread
    k = {(r["delta"], r["alpha1"]): r["kappa1_mean"] for r in rows}
    a1 = rows[0]["alpha1"]
    assert k[(0.2, a1)] > k[(2.0, a1)]


def test_sweep_is_byte_identical(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mapping": ["snasu"], "snr": "30:30:5", "n_samples": 2000, "seed": 11,
                               "params": {"delta": 0.49, "alpha1": 2.75, "alpha2": 2.04}}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
