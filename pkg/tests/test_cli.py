import json
import statistics

import pytest

from ntn_isac import cli, outputs

SMALL = """
seed: 5
scenario:
  n_hotspot: 6
  n_victim: 4
  n_mobile: 10
  n_uav: 4
  n_tn: 8
  n_slots: 6
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def test_run_writes_files(cfg_file, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["run", "--config", str(cfg_file), "--scenario", "ntn", "--seed", "42",
                     "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == sorted(outputs.RUN_FILES)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 42 and summary["config"]["seed"] == 42
    assert summary["config"]["scenario"]["n_uav"] == 4
    cols = summary["metadata"]["files"]["links.csv"]["columns"]
    assert (out / "links.csv").read_text().splitlines()[0] == ",".join(cols)


def test_run_deterministic(cfg_file, tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert cli.main(["run", "--config", str(cfg_file), "--out-dir", str(d)]) == 0
    for name in outputs.RUN_FILES:
        a, b = (d / name for d in dirs)
        if name == "summary.json":
            ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
            ja.pop("wall_clock_s"), jb.pop("wall_clock_s")
            assert ja == jb
        else:
            assert a.read_bytes() == b.read_bytes(), name


def test_gamma_flag_for_tn(cfg_file, tmp_path):
    out = tmp_path / "tn"
    assert cli.main(["run", "--config", str(cfg_file), "--scenario", "tn", "--gamma", "0.5",
                     "--out-dir", str(out)]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["gamma"] == 0.5 and s["audit"]["surviving_bs"] == 4


def test_missing_config_exit_2(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_bad_config_exit_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("scenario:\n  n_users: 3\n")
    assert cli.main(["run", "--config", str(p), "--out-dir", str(tmp_path / "o")]) == 2


def test_runtime_failure_exit_1(cfg_file, tmp_path, monkeypatch):
    from ntn_isac import engine

    def boom(*a, **kw):
        raise engine.SimulationError(3, ValueError("bad"))

    monkeypatch.setattr(engine, "run", boom)
    assert cli.main(["run", "--config", str(cfg_file), "--out-dir", str(tmp_path / "o")]) == 1


def test_sweep_and_medians(cfg_file, tmp_path):
    out = tmp_path / "sw"
    assert cli.main(["sweep", "--config", str(cfg_file), "--gammas", "0,0.5",
                     "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir() if p.is_dir()) == \
        ["ntn", "tn_gamma_0", "tn_gamma_0.5"]
    rows = outputs.read_csv(out / "sweep_medians.csv")
    assert len(rows) == 3
    for row in rows:
        label = "ntn" if row["scenario"] == "ntn" else f"tn_gamma_{float(row['gamma']):g}"
        links = outputs.read_csv(out / label / "links.csv")
        assert float(row["median_all_db"]) == statistics.median(float(r["sinr_db"]) for r in links)
        mob = [float(r["sinr_db"]) for r in links if r["user_class"] == "mobile"]
        assert float(row["median_mobile_db"]) == statistics.median(mob)


def test_sweep_single_gamma(cfg_file, tmp_path):
    out = tmp_path / "sw1"
    assert cli.main(["sweep", "--config", str(cfg_file), "--gammas", "0",
                     "--out-dir", str(out)]) == 0
    assert len([p for p in out.iterdir() if p.is_dir()]) == 2


def test_report(cfg_file, tmp_path, capsys):
    out = tmp_path / "r"
    cli.main(["run", "--config", str(cfg_file), "--audit", "--out-dir", str(out)])
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    for token in ("A=", "P=", "R=", "F1=", "median dB", "speed RMSE", "precision >= 0.85",
                  "accuracy >= 0.82"):
        assert token in text


def test_report_missing_dir(tmp_path):
    assert cli.main(["report", str(tmp_path / "none")]) == 2


@pytest.mark.parametrize("tamper", [
    lambda d: d.update(fp=-1),
    lambda d: d.update(tp="x"),
    lambda d: d["scores"].update(accuracy=0.123),
])
def test_report_tampered(cfg_file, tmp_path, tamper):
    out = tmp_path / "t"
    cli.main(["run", "--config", str(cfg_file), "--out-dir", str(out)])
    p = out / "confusion.json"
    data = json.loads(p.read_text())
    tamper(data)
    p.write_text(json.dumps(data))
    assert cli.main(["report", str(out)]) == 1


def test_report_flags_audit_violations(cfg_file, tmp_path):
    out = tmp_path / "v"
    cli.main(["run", "--config", str(cfg_file), "--out-dir", str(out)])
    p = out / "summary.json"
    data = json.loads(p.read_text())
    data["audit"]["violations"] = 2
    p.write_text(json.dumps(data))
    assert cli.main(["report", str(out)]) == 1


def test_preset_flag(tmp_path, monkeypatch):
    captured = {}

    def fake_run(cfg):
        captured["cfg"] = cfg
        raise cli.ConfigError("stop")

    monkeypatch.setattr(cli.engine, "run", fake_run)
    assert cli.main(["run", "--preset", "paper-v1", "--seed", "8", "--audit"]) == 2
    cfg = captured["cfg"]
    assert cfg.preset == "paper-v1" and cfg.seed == 8 and cfg.engine.audit


def test_bad_gamma_list():
    with pytest.raises(SystemExit):
        cli.main(["sweep", "--gammas", "a,b"])
