import csv
import importlib
import io
import json

import pytest
from fastapi.testclient import TestClient

from tsconformal import cli
from tsconformal.service.app import app

app_module = importlib.import_module("tsconformal.service.app")

client = TestClient(app)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_health():
    assert client.get("/health").json() == {"status": "ok"}


def test_coverage_sim_json_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"process": {"kind": "ma", "t": 1}, "n": 20, "trials": 50}))
    code, out, _ = run(capsys, "coverage-sim", "--config", str(cfg), "--trials", "2000", "--seed", "5")
    assert code == 0
    body = json.loads(out)
    assert body["trials"] == 2000 and body["config"]["master_seed"] == 5
    assert 0 <= body["empirical_coverage"] <= 1


def test_coverage_sim_csv_to_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"process": {"kind": "ma", "t": 0}, "n": 10}))
    dest = tmp_path / "out.csv"
    code, out, _ = run(capsys, "coverage-sim", "--config", str(cfg), "--trials", "500", "--format", "csv", "--out", str(dest), "--jitter", "on")
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(dest.read_text())))
    assert rows[0]["trials"] == "500"


def test_invalid_inputs_exit_1(capsys, tmp_path):
    assert run(capsys, "no-such-command")[0] == 1
    assert run(capsys, "coverage-sim", "--trials", "0")[0] == 1
    assert run(capsys, "coverage-sim", "--config", str(tmp_path / "missing.json"))[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"process": {"kind": "ma"}, "n": 10, "alpha": 1.5}))
    code, _, err = run(capsys, "coverage-sim", "--config", str(bad))
    assert code == 1 and err.startswith("error:")
    bad.write_text("{not json")
    assert run(capsys, "coverage-sim", "--config", str(bad))[0] == 1


def test_exact_coverage(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"process": {"kind": "markov", "transition": [[0.9, 0.1], [0.1, 0.9]]}, "score": {"kind": "rank"}, "n": 4}))
    code, out, _ = run(capsys, "exact-coverage", "--config", str(cfg), "--method", "event", "--jitter", "on")
    assert code == 0
    body = json.loads(out)
    assert body["method"] == "event" and body["sequences"] == 32
    code, out2, _ = run(capsys, "exact-coverage", "--config", str(cfg), "--method", "rank", "--jitter", "on")
    assert json.loads(out2)["coverage"] == pytest.approx(body["coverage"], abs=1e-12)


def test_switch_exact_csv(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"process": {"kind": "cyclic", "K": 2, "b": 1.0}, "n": 2}))
    code, out, _ = run(capsys, "switch-exact", "--config", str(cfg), "--format", "csv")
    assert code == 0
    psi, lags = out.strip().split("\n\n")
    assert psi.splitlines()[0] == "k,tau,psi" and len(psi.splitlines()) == 10
    assert lags.splitlines()[0] == "tau,beta,psi_bar"


def test_bounds(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bound": "cor1", "n": 40, "ma_t": 2, "conservative": True}))
    code, out, _ = run(capsys, "bounds", "--config", str(cfg))
    body = json.loads(out)
    assert code == 0 and body["bound_value"] == pytest.approx(0.9 - 3 / 41) and body["minimizing_tau"] == 3
    cfg.write_text(json.dumps({"bound": "thm2", "n": 9, "b": 1.0, "K": 10000}))
    assert json.loads(run(capsys, "bounds", "--config", str(cfg))[1])["bound_value"] == pytest.approx(0.6795)
    cfg.write_text(json.dumps({"bound": "thm2", "n": 10, "b": 1.0, "K": 10000}))
    assert run(capsys, "bounds", "--config", str(cfg))[0] == 1
    cfg.write_text(json.dumps({"bound": "thm4", "n": 2, "table": {"0,0": 0.0, "1,0": 0.0, "2,0": 0.0}}))
    code, out, _ = run(capsys, "bounds", "--config", str(cfg), "--format", "csv")
    assert code == 0 and out.startswith("name,kind,bound_value")


def test_figure1_and_thm2(capsys):
    code, out, _ = run(capsys, "figure1", "--trials", "2000", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 25 and set(rows[0]) == {"t", "n", "coverage", "stderr", "lower_bound", "upper_bound"}
    code, out, _ = run(capsys, "thm2", "--trials", "5000", "--seed", "1")
    body = json.loads(out)
    assert code == 0 and body["bounds"][0]["name"] == "thm2_ceiling"


def test_predict(capsys, tmp_path):
    hist = tmp_path / "h.csv"
    hist.write_text("x,y\n" + "".join(f"{i / 40},3\n" for i in range(40)) + "0.5,\n")
    code, out, _ = run(capsys, "predict", str(hist), "--alpha", "0.1")
    body = json.loads(out)
    assert code == 0 and body["lo"] == pytest.approx(3) and body["hi"] == pytest.approx(3)
    beta = tmp_path / "b.csv"
    beta.write_text("tau,beta\n" + "".join(f"{t},0\n" for t in range(41)))
    code, out, _ = run(capsys, "predict", str(hist), "--beta", str(beta), "--format", "csv")
    assert code == 0 and "coverage_lower_bound" in out.splitlines()[0]
    short = tmp_path / "s.csv"
    short.write_text("x,y\n0,1\n1,\n")
    code, _, err = run(capsys, "predict", str(short))
    assert code == 1 and "too short" in err
    junk = tmp_path / "j.csv"
    junk.write_text("x,y\n0,abc\n1,\n")
    assert run(capsys, "predict", str(junk))[0] == 1
    assert run(capsys, "predict")[0] == 1


def test_unbounded_predict_serializes_nulls():
    text = "x,y\n" + "".join(f"{i},{i % 3}\n" for i in range(8)) + "8,\n"
    body = client.post("/predict", json={"csv": text}).json()
    assert body["unbounded"] and body["lo"] is None and body["threshold"] is None


def test_verify_exit_codes(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "--criteria", "9")
    body = json.loads(out)
    assert code == 0 and body["passed"] and body["checks"][-1]["name"].startswith("9")

    def failing(seed, scale, criteria, workers):
        return {"passed": False, "seed": seed, "scale": scale, "checks": [{"name": "x", "passed": False, "summary": "forced", "seconds": 0.0}]}

    monkeypatch.setattr(app_module, "run_verification_suite", failing)
    code, out, _ = run(capsys, "verify", "--format", "csv")
    assert code == 2 and "forced" in out


def test_service_rejects_extra_fields():
    r = client.post("/coverage-sim", json={"process": {"kind": "ma"}, "n": 10, "bogus": 1})
    assert r.status_code == 422
