import json
import subprocess
import sys

import numpy as np
import pytest

from eivkron.experiments.cli import EXIT_CONFIG, EXIT_FINDINGS, EXIT_OK, EXIT_USAGE, cli_main

SIM = """
[study]
kind = "rate"
trials = 2
seed = 7
[model]
A = { family = "ar1", rho = 0.3 }
tau_B = 0.1
m = 12
f = 80
d = 3
[options]
estimators = ["lasso"]
"""


@pytest.fixture
def sim_cfg(tmp_path):
    p = tmp_path / "sim.toml"
    p.write_text(SIM)
    return p


def test_usage_errors(capsys):
    assert cli_main([]) == EXIT_USAGE
    assert cli_main(["frobnicate"]) == EXIT_USAGE
    assert cli_main(["study"]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path, capsys):
    assert cli_main(["study", "--config", str(tmp_path / "none.toml")]) == EXIT_CONFIG
    bad = tmp_path / "bad.toml"
    bad.write_text("[study]\nkind = 'rate'\ntrials = 0\n")
    assert cli_main(["study", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "study.trials" in capsys.readouterr().err
    bad.write_text("[study\n")
    assert cli_main(["study", "--config", str(bad)]) == EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err


def test_simulate_then_fit(tmp_path, sim_cfg):
    out = tmp_path / "bundle"
    assert cli_main(["simulate", "--config", str(sim_cfg), "--seed", "3", "--out", str(out)]) == EXIT_OK
    meta = json.loads((out / "meta.json").read_text())
    assert meta["trace_A"] == pytest.approx(12) and meta["tau_B"] == pytest.approx(0.1)
    pen = tmp_path / "pen.toml"
    pen.write_text(f"[fit]\ntrace_A = {meta['trace_A']!r}\nlambda = 0.2\nb0 = 1.0\nd = 3\nmu = 0.2\ntau = 0.05\n")
    for est in ("lasso", "conic"):
        fo = tmp_path / est
        rc = cli_main(["fit", "--X", str(out / "X.csv"), "--y", str(out / "y.csv"), "--estimator", est,
                       "--config", str(pen), "--out", str(fo)])
        assert rc == EXIT_OK
        beta = np.loadtxt(fo / "beta_hat.csv", delimiter=",")
        res = json.loads((fo / "result.json").read_text())
        assert beta.shape == (12,) and res["estimator"] == est and res["converged"]


def test_fit_rejects_missing_field(tmp_path, sim_cfg):
    out = tmp_path / "bundle"
    cli_main(["simulate", "--config", str(sim_cfg), "--out", str(out)])
    pen = tmp_path / "pen.toml"
    pen.write_text("trace_A = 12.0\nradius = 1.0\n")
    rc = cli_main(["fit", "--X", str(out / "X.csv"), "--y", str(out / "y.csv"), "--config", str(pen)])
    assert rc == EXIT_CONFIG


def test_check_outputs_certificate(tmp_path, capsys):
    M = tmp_path / "M.csv"
    np.savetxt(M, -np.eye(3), delimiter=",")
    cfg = tmp_path / "c.toml"
    cfg.write_text("[condition]\nkind = 'lower_re'\nalpha = 0.1\ntau = 0.0\n")
    assert cli_main(["check", "--matrix", str(M), "--config", str(cfg)]) == EXIT_OK
    cert = json.loads(capsys.readouterr().out)
    assert cert["status"] == "falsified" and cert["witness"] is not None
    cfg.write_text("kind = 'sparse_eig'\nd = 2\n")
    np.savetxt(M, np.diag([1.0, 2.0, 3.0]), delimiter=",")
    dest = tmp_path / "cert.json"
    assert cli_main(["check", "--matrix", str(M), "--config", str(cfg), "--out", str(dest)]) == EXIT_OK
    cert = json.loads(dest.read_text())
    assert cert["params"]["rho_max"] == 3.0 and cert["status"] == "verified_exact"
    cfg.write_text("kind = 'nope'\n")
    assert cli_main(["check", "--matrix", str(M), "--config", str(cfg)]) == EXIT_CONFIG


@pytest.mark.invariant
def test_study_twice_byte_identical(tmp_path, sim_cfg, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli_main(["study", "--config", str(sim_cfg), "--seed", "42", "--out", str(a)]) == EXIT_OK
    monkeypatch.setenv("EIVKRON_THREADS", "2")
    assert cli_main(["study", "--config", str(sim_cfg), "--seed", "42", "--out", str(b)]) == EXIT_OK
    for name in ("rate_trials.csv", "rate_aggregate.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_study_findings_exit_code(tmp_path, monkeypatch):
    import eivkron.experiments.cli as cli
    from eivkron.experiments.report import ExperimentReport

    def fake(cfg, threads):
        return ExperimentReport("rate", ["cell"], [], {}, {}, findings=["bound violated"])

    monkeypatch.setattr(cli, "run_study", fake)
    p = tmp_path / "c.toml"
    p.write_text(SIM)
    assert cli_main(["study", "--config", str(p), "--out", str(tmp_path)]) == EXIT_FINDINGS


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "eivkron", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "eivkron" in r.stdout
