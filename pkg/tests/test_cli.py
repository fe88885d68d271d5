import json
from pathlib import Path

import numpy as np
import pytest

from boolperc import cli
from boolperc.config import ConfigError, load_config, parse_override, validate
from boolperc.mc import run_replicates
from boolperc.reach import QuadratureError
from boolperc.rng import RngStream

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "configs" / "golden_subcritical.yaml"


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main(args + ["--out", str(out)])
    return code, out


def _draw(stream, scale):
    return float(stream.generator().random() * scale)


def test_replicates_independent_of_workers():
    s = RngStream(3, 1)
    a = run_replicates(_draw, s, 600, (2.0,), workers=1)
    b = run_replicates(_draw, s, 600, (2.0,), workers=2, chunk=100)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        run_replicates(_draw, s, 0, (1.0,))


def test_knitting_check_exit_zero(tmp_path):
    code, out = run(["knitting-check"], tmp_path)
    assert code == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["result"]["passed"] is True
    assert len(doc["result"]["knitting"]["junctions"]) == 36


def test_knitting_check_fails_for_wide_spacing(tmp_path):
    code, _ = run(["knitting-check", "--set", "h_step=10"], tmp_path)
    assert code == 1


def test_malformed_law_exit_two(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("lambda: 0.1\nlaw:\n  kind: pareto\n  tau: -1\n")
    code, _ = run(["sweep", "-c", str(cfg)], tmp_path)
    assert code == 2
    err = capsys.readouterr().err
    assert "bad.yaml:4" in err and "law" in err


def test_invalid_fields_exit_two(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("lambda: 0.1\nlaw: {kind: fixed, r0: 1}\nbogus: 3\n")
    assert run(["sweep", "-c", str(cfg)], tmp_path)[0] == 2
    assert "bogus" in capsys.readouterr().err
    cfg.write_text("lambda: -0.1\nlaw: {kind: fixed, r0: 1}\n")
    assert run(["sweep", "-c", str(cfg)], tmp_path)[0] == 2
    assert "c.yaml:1" in capsys.readouterr().err
    cfg.write_text("lambda: [0.1\n")
    assert run(["sweep", "-c", str(cfg)], tmp_path)[0] == 2
    assert run(["sweep", "--set", "n_reps=abc", "--set", "law.kind=fixed"], tmp_path)[0] == 2


def test_config_round_trip():
    cfg = load_config(str(GOLDEN), "summability", {"out_dir": "/tmp/x", "workers": 3})
    again = validate(json.loads(cfg.to_json()))
    assert again.echo() == cfg.echo()
    assert "out_dir" not in cfg.echo() and cfg.get("workers") == 3
    assert cfg.law.to_dict() == {"kind": "fixed", "r0": 1.0}


def test_json_and_yaml_golden_agree():
    a = load_config(str(GOLDEN), "summability")
    b = load_config(str(GOLDEN.with_suffix(".json")), "summability")
    assert a.echo() == b.echo()


def test_overrides():
    assert parse_override("law.tau=3") == ("law.tau", 3)
    assert parse_override("lambda=[0.1, 0.2]") == ("lambda", [0.1, 0.2])
    with pytest.raises(ConfigError):
        parse_override("novalue")
    cfg = load_config(str(GOLDEN), "summability", {"law.r0": 2})
    assert cfg.law.r0 == 2.0


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("BOOLPERC_SEED", "42")
    cfg = validate({"lambda": 0.1, "law": {"kind": "fixed", "r0": 1}}, "sample")
    assert cfg.seed == 42


def test_sweep_deterministic_and_worker_independent(tmp_path):
    args = ["sweep", "--set", "lambda=[0.2, 0.4]", "--set", "law={kind: fixed, r0: 1}", "--set", "L=12",
            "--n-reps", "300", "--seed", "5"]
    c1, o1 = run(args + ["--workers", "1"], tmp_path, "a")
    c2, o2 = run(args + ["--workers", "2"], tmp_path, "b")
    assert c1 == c2 == 0
    assert (o1 / "result.json").read_bytes() == (o2 / "result.json").read_bytes()
    assert (o1 / "result.csv").read_bytes() == (o2 / "result.csv").read_bytes()
    header = (o1 / "result.csv").read_text().splitlines()[0]
    assert header == ",".join(cli.CSV_COLUMNS["sweep"])


SMALL = {
    "sample": ["--set", "lambda=0.2", "--set", "law={kind: uniform, a: 0.5, b: 1}"],
    "recursion-check": ["--set", "lambda=0.01", "--set", "alpha=2", "--set", "law={kind: fixed, r0: 1}",
                        "--n-reps", "100"],
    "summability": ["--set", "lambda=0.3", "--set", "b=2", "--set", "n_max=1", "--set", "n_empirical=1",
                    "--set", "law={kind: fixed, r0: 1}", "--n-reps", "50"],
    "vacancy-cert": ["--set", "lambda=0.3", "--set", "b=2", "--set", "n_max=1",
                     "--set", "law={kind: fixed, r0: 1}", "--n-reps", "20"],
    "slice-check": ["--set", "lambda=0.3", "--set", "law={kind: fixed, r0: 1}", "--set", "window=8",
                    "--n-reps", "40"],
    "threshold": ["--set", "law={kind: fixed, r0: 1}", "--set", "scales=[8]", "--set", "tol=0.1",
                  "--n-reps", "100"],
    "lambda-d": ["--set", "lambda=[0.05, 0.1]", "--set", "law={kind: fixed, r0: 1}", "--set", "k_max=1",
                 "--set", "censor_R=4", "--set", "tol=0.2", "--n-reps", "50"],
    "e-event": ["--set", "lambda=0.02", "--set", "law={kind: fixed, r0: 1}", "--set", "k_max=4",
                "--n-reps", "50"],
    "layout-dump": ["--set", "alpha=2"],
}


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_subcommand_runs(command, tmp_path):
    code, out = run([command] + SMALL[command] + ["--seed", "3"], tmp_path)
    assert code in (0, 1)
    doc = json.loads((out / "result.json").read_text())
    assert doc["config"]["command"] == command and doc["seed"] == 3
    if command in ("sample", "recursion-check", "threshold", "lambda-d", "summability", "vacancy-cert"):
        assert (out / "result.csv").exists()


def test_numerical_failure_exit_three(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise QuadratureError("did not converge")
    monkeypatch.setitem(cli.HANDLERS, "layout-dump", boom)
    assert run(["layout-dump"], tmp_path)[0] == 3
    assert "did not converge" in capsys.readouterr().err


def test_missing_required_field(tmp_path, capsys):
    assert run(["sweep", "--set", "lambda=0.1"], tmp_path)[0] == 2
    assert "law" in capsys.readouterr().err


@pytest.mark.slow
def test_golden_summability_passes(tmp_path):
    code, out = run(["summability", "-c", str(GOLDEN)], tmp_path)
    assert code == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["result"]["overall"] == "PASS"
