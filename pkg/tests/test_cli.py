import csv
import io
import json
from pathlib import Path

import pytest

from thermal_routing import analysis, checks, cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def pairs(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["quantity", "value"]
    return {k: float(v) for k, v in rows[1:]}


def test_fmt():
    assert cli.fmt(-0.0) == "0"
    assert cli.fmt(float("nan")) == "nan"
    assert cli.fmt(1 / 3) == "0.333333333333"
    assert cli.fmt(True) == "1"


def test_steady_baseline(capsys):
    code, out, _ = run(capsys, "steady", "--config", str(CONFIGS / "baseline.ini"))
    v = pairs(out)
    assert code == 0
    assert (v["n1"], v["n2"], v["dn1"], v["dn2"]) == (100.0, 100.0, 0.0, 50.0)


def test_steady_json(capsys):
    code, out, _ = run(capsys, "steady", "--config", str(CONFIGS / "baseline.ini"), "--output", "json")
    doc = json.loads(out)
    assert code == 0 and doc["metadata"]["system"] == "cascaded"
    assert doc["values"]["dn2"] == 50


def test_steady_optomech(capsys):
    code, out, _ = run(capsys, "steady", "--config", str(CONFIGS / "optomech_linearized.ini"))
    v = pairs(out)
    assert code == 0
    assert {"rwa_n1", "rwa_nm", "reduced_n2"} <= v.keys()
    assert v["dn1"] == pytest.approx(0, abs=1e-9)


def test_steady_rejects_sweep_section(capsys):
    code, _, err = run(capsys, "steady", "--config", str(CONFIGS / "routing_map.ini"))
    assert code == 3 and "sweep" in err


def test_unstable_model_exit_code(capsys):
    code, out, err = run(capsys, "steady", "--config", str(CONFIGS / "marginal.ini"))
    assert code == 2 and out == ""
    assert "eig1" in err and "eig2" in err


def test_config_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text((CONFIGS / "baseline.ini").read_text().replace("gamma1 = 1", "gamma1 = fast"))
    code, _, err = run(capsys, "steady", "--config", str(bad))
    assert code == 3 and "gamma1" in err
    code, _, _ = run(capsys, "steady", "--config", str(tmp_path / "missing.ini"))
    assert code == 3


def test_sweep_csv(capsys, tmp_path):
    target = tmp_path / "map.csv"
    code, out, _ = run(capsys, "sweep", "--config", str(CONFIGS / "routing_map.ini"), "--out", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert text.splitlines()[0] == "delta,m3,n1,n2,m1,m2,dn1,dn2,valid"
    assert len(rows) == 101 * 101
    assert {r["valid"] for r in rows} == {"0", "1"}
    # CSV values carry 12 significant digits
    for r in rows[::997]:
        ref = analysis.closed_form_dn2(1.0, float(r["delta"]), 100.0, float(r["m3"]))
        assert float(r["dn2"]) == pytest.approx(ref, rel=1e-11, abs=1e-9)
    run(capsys, "sweep", "--config", str(CONFIGS / "routing_map.ini"), "--out", str(tmp_path / "again.csv"))
    assert (tmp_path / "again.csv").read_text() == text


def test_sweep_json(capsys, tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(
        (CONFIGS / "routing_map.ini").read_text().replace("delta_steps = 101", "delta_steps = 3")
        .replace("m3_steps = 101", "m3_steps = 3")
    )
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--output", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["metadata"]["tool"] == "thermal-routing"
    assert doc["metadata"]["targets"] == {"m1": 100, "m2": 50}
    assert len(doc["records"]) == 9 and doc["records"][-1]["valid"] is False


def test_sweep_all_invalid_exits_two(capsys, tmp_path):
    cfg = tmp_path / "hot.ini"
    cfg.write_text(
        (CONFIGS / "routing_map.ini").read_text().replace("m3_min = 0", "m3_min = 150")
        .replace("delta_steps = 101", "delta_steps = 2").replace("m3_steps = 101", "m3_steps = 2")
    )
    code, out, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 2 and "invalid" in err
    assert len(out.splitlines()) == 5


def test_map(capsys):
    code, out, _ = run(capsys, "map", "--config", str(CONFIGS / "optomech_linearized.ini"))
    v = pairs(out)
    assert code == 0
    assert v["F_abs"] <= 1e-15
    assert v["gamma1"] == pytest.approx(0.4) and v["gamma2"] == pytest.approx(0.4)


def test_map_full_level(capsys):
    code, out, _ = run(capsys, "map", "--config", str(CONFIGS / "optomech_full.ini"))
    v = pairs(out)
    assert code == 0 and v["residual"] <= 1e-10
    assert v["phi"] == pytest.approx(1.5707963, rel=1e-3)


def test_map_needs_optomech(capsys):
    code, _, _ = run(capsys, "map", "--config", str(CONFIGS / "baseline.ini"))
    assert code == 3


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--check", "2", "--check", "5")
    assert code == 0
    assert out.splitlines()[0].startswith("PASS  [2]")
    assert out.splitlines()[-1] == "all 2 checks passed"


def test_verify_detects_a_broken_reference(capsys, monkeypatch):
    monkeypatch.setattr(analysis, "closed_form_dn2", lambda k, D, m1, m3: 1.01 * 2 * k**2 / (4 * k**2 + D**2) * (m1 - m3))
    code, out, _ = run(capsys, "verify", "--check", "1")
    assert code == 1
    assert out.startswith("FAIL  [1]") and "FAILED: 1" in out


def test_crashing_check_is_a_failure(monkeypatch):
    def boom():
        raise RuntimeError("boom")

    monkeypatch.setitem(checks.CHECKS, "2", boom)
    (result,) = checks.run_checks(["2"])
    assert not result.passed and "boom" in result.measured
