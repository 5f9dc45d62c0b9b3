import json

import pytest

from ehpolar import __version__
from ehpolar.cli import config_hash, main


def test_verify_defaults_pass(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) >= 5 and all(line.startswith("PASS") for line in out)


def test_construct_is_byte_identical(tmp_path):
    args = ["construct", "--channel", "bsc:0.11", "--k", "5", "--seed", "3", "--backend", "exact"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("ztables.csv", "infoset.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    text = (tmp_path / "a" / "ztables.csv").read_text()
    assert f"# version={__version__}" in text and "# config=" in text
    info = json.loads((tmp_path / "a" / "infoset.json").read_text())
    assert info["config_hash"] in text and info["n"] == 32


def test_config_file_and_flag_override(tmp_path):
    cfg = {"channel": {"type": "bec", "eps": 0.3}, "k": 5, "trials": 500, "seed": 1,
           "policy": "budget", "budget": 0.05}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o1")]) == 0
    assert main(["simulate", "--config", str(path), "--trials", "300", "--out", str(tmp_path / "o2")]) == 0
    r1 = json.loads((tmp_path / "o1" / "report.json").read_text())
    r2 = json.loads((tmp_path / "o2" / "report.json").read_text())
    assert r1["report"]["trials"] == 500 and r2["report"]["trials"] == 300
    assert r1["config_hash"] != r2["config_hash"]
    assert r1["version"] == __version__


def test_simulate_reproducible_and_workers_free(tmp_path):
    base = ["simulate", "--channel", "bsc:0.05", "--k", "5", "--trials", "3000", "--seed", "7",
            "--policy", "budget", "--budget", "0.05"]
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--out", str(tmp_path / "b")]) == 0
    assert main(base + ["--workers", "2", "--out", str(tmp_path / "c")]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    ra, rc = (json.loads((tmp_path / d / "report.json").read_text()) for d in "ac")
    assert ra["report"] == rc["report"] and ra["config_hash"] == rc["config_hash"]


def test_eh_with_trace(tmp_path, monkeypatch):
    monkeypatch.setenv("EHPOLAR_OUTDIR", str(tmp_path / "env"))
    energy = json.dumps({"family": "bernoulli", "amplitude": 2, "rho": 0.25})
    args = ["eh", "--channel", "bsc:0.05", "--k", "6", "--trials", "500", "--seed", "2",
            "--policy", "budget", "--budget", "0.05", "--energy", energy, "--trace"]
    assert main(args) == 0
    rep = json.loads((tmp_path / "env" / "eh_report.json").read_text())
    assert rep["m"] == 323 and rep["config"]["p1"] == 0.5
    assert rep["report"]["outage_rate"] is not None
    lines = (tmp_path / "env" / "trace.csv").read_text().splitlines()
    assert lines[0] == f"# config={rep['config_hash']}"
    assert lines[2] == "slot,arrival,attempted,transmitted,battery"
    assert len(lines) == 3 + 323 + 64


def test_scaling_csv(tmp_path):
    assert main(["scaling", "--channel", "bec:0.5", "--k-min", "8", "--k-max", "12", "--seed", "0",
                 "--out", str(tmp_path)]) == 0
    rows = [ln for ln in (tmp_path / "sweep.csv").read_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "k,n,m,N,info_size,rate,capacity,gap"
    gaps = [float(r.split(",")[-1]) for r in rows[1:]]
    assert len(gaps) == 5 and all(a > b > 0 for a, b in zip(gaps, gaps[1:]))
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["fit"]["r_squared"] >= 0.98


def test_scaling_records_fit_failure(tmp_path):
    assert main(["scaling", "--channel", "bsc:0.0", "--k-min", "1", "--k-max", "4", "--out", str(tmp_path)]) == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["fit"]["mu"] is None and fit["fit"]["error"]


@pytest.mark.parametrize("argv", [
    ["simulate", "--channel", "foo:1"],
    ["simulate", "--channel", "bsc:0.1", "--k", "4"],
    ["construct", "--channel", "bsc:1.5", "--k", "3", "--seed", "1"],
    ["eh", "--channel", "bsc:0.1", "--k", "1", "--trials", "10", "--seed", "1",
     "--energy", '{"family": "constant", "value": 0.5}'],
    ["bogus"],
])
def test_configuration_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + (["--out", str(tmp_path)] if argv[0] != "bogus" else [])) == 2
    assert capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


def test_verify_failure_exits_1(monkeypatch, capsys):
    import ehpolar.cli as cli

    monkeypatch.setattr(cli, "run_checks", lambda seed: [("always-fails", False, "forced")])
    assert main(["verify"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_config_hash_ignores_worker_count():
    assert config_hash({"a": 1, "workers": 1}) == config_hash({"a": 1, "workers": 8})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
