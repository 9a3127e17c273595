import json
import subprocess
import sys

import pytest

from levylt import cli


def run(argv, env=None, capsys=None):
    code = cli.main(argv, environ=env or {})
    out = capsys.readouterr() if capsys else None
    return code, out


def csv_body(text):
    return [l for l in text.splitlines() if not l.startswith("#")]


def test_audit_brownian(capsys):
    code, out = run(["audit", "--family", "brownian"], capsys=capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["c_psi_0"] == pytest.approx(1.0, abs=1e-10)
    assert doc["c_psi_1"] == pytest.approx(8 / 3, abs=1e-10)
    assert doc["passed"] and all(doc["gates"].values())


def test_bad_beta_is_usage_error(capsys):
    code, out = run(["audit", "--beta", "0.9"], capsys=capsys)
    assert code == 2
    assert "beta" in out.err


def test_seed_required(capsys):
    code, out = run(["simulate", "--t", "1", "--dt", "0.01", "--paths", "3"], capsys=capsys)
    assert code == 2 and "seed" in out.err


def test_invalid_grid_named(capsys):
    code, out = run(["simulate", "--seed", "1", "--h-grid", "0.3"], capsys=capsys)
    assert code == 2 and "h_grid" in out.err


def test_unknown_config_field(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text("bogus = 1\n")
    code, out = run(["audit", "--config", str(p)], capsys=capsys)
    assert code == 2 and "bogus" in out.err


def test_unknown_flag(capsys):
    code, _ = run(["audit", "--nope"], capsys=capsys)
    assert code == 2


def test_clt_needs_enough_paths(capsys):
    code, out = run(["clt", "--seed", "1", "--paths", "50"], capsys=capsys)
    assert code == 2 and "paths" in out.err


SIM = ["simulate", "--beta", "1.5", "--t", "2", "--dt", "0.01", "--paths", "6", "--seed", "13"]


def test_simulate_output_shape_and_header(capsys):
    code, out = run(SIM, capsys=capsys)
    assert code == 0
    lines = out.out.splitlines()
    assert lines[0].startswith("# levylt ")
    cfg = json.loads(lines[1][len("# config: "):])
    assert cfg["exponent"] == {"family": "stable", "beta": 1.5}
    assert "threads" not in cfg
    body = csv_body(out.out)
    assert body[0] == "path_id,I_value,alpha_value" and len(body) == 7


def test_byte_identical_reruns(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(SIM + ["--out", str(a)])[0] == 0
    assert run(SIM + ["--out", str(b), "--threads", "2"])[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_toml_json_equivalent(tmp_path, capsys):
    t, j = tmp_path / "c.toml", tmp_path / "c.json"
    t.write_text('seed = 13\nt = 2.0\ndt = 0.01\npaths = 6\n[exponent]\nfamily = "stable"\nbeta = 1.5\n')
    j.write_text(json.dumps({"seed": 13, "t": 2.0, "dt": 0.01, "paths": 6,
                             "exponent": {"family": "stable", "beta": 1.5}}))
    _, o1 = run(["simulate", "--config", str(t)], capsys=capsys)
    _, o2 = run(["simulate", "--config", str(j)], capsys=capsys)
    _, o3 = run(SIM, capsys=capsys)
    assert o1.out == o2.out
    assert csv_body(o1.out) == csv_body(o3.out)


def test_layering_precedence(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text("seed = 1\nwalks = 2\nn = 10\n")
    _, o = run(["rw", "--config", str(p)], env={"LEVYLT_WALKS": "4"}, capsys=capsys)
    assert len(csv_body(o.out)) == 5
    _, o = run(["rw", "--config", str(p), "--walks", "3"], env={"LEVYLT_WALKS": "4"}, capsys=capsys)
    assert len(csv_body(o.out)) == 4


def test_env_exponent_override(capsys):
    _, o = run(["audit"], env={"LEVYLT_BETA": "1.5"}, capsys=capsys)
    assert json.loads(o.out)["config"]["exponent"] == {"family": "stable", "beta": 1.5}


def test_bad_env_value(capsys):
    code, out = run(["rw", "--seed", "1"], env={"LEVYLT_WALKS": "many"}, capsys=capsys)
    assert code == 2 and "walks" in out.err


def test_rw_subcommand(capsys):
    code, out = run(["rw", "--seed", "3", "--n", "50", "--walks", "5"], capsys=capsys)
    assert code == 0
    rows = [r.split(",") for r in csv_body(out.out)[1:]]
    assert all(r[1] == r[2] for r in rows)


def test_density_subcommand(capsys):
    code, out = run(["density", "--op", "p", "--s", "1", "--x", "0", "1"], capsys=capsys)
    assert code == 0
    body = csv_body(out.out)
    assert body[0] == "s,x,gamma,value,err_estimate"
    assert float(body[1].split(",")[3]) == pytest.approx(1 / (2 * 3.141592653589793) ** 0.5, rel=1e-10)


def test_mixture_components_flag(capsys):
    code, out = run(["audit", "--components", "1:1.3,0.5:2"], capsys=capsys)
    assert code == 0
    assert json.loads(out.out)["config"]["exponent"]["family"] == "mixture"


def test_clt_writes_report_and_samples(tmp_path, capsys):
    rep, samples = tmp_path / "r.json", tmp_path / "s.csv"
    code, _ = run(["clt", "--beta", "1.5", "--t", "10", "--dt", "0.01", "--paths", "200", "--seed", "2",
                   "--limit-dt", "0.001", "--limit-h-grid", "0.05", "--report", str(rep),
                   "--samples-csv", str(samples)], capsys=capsys)
    assert code in (0, 1)
    doc = json.loads(rep.read_text())
    assert code == (0 if doc["comparison"]["passed"] else 1)
    body = csv_body(samples.read_text())
    assert body[0] == "path_id,statistic,limit_sample,I_value,alpha_value,limit_alpha"
    assert len(body) == 201


def test_console_script_module():
    r = subprocess.run([sys.executable, "-m", "levylt.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("levylt ")
