"""Command-line experiment runner.

    boolperc <command> [--config FILE] [--set key=value ...] [--seed N] [--out DIR] [--workers N]

Each run writes ``result.json`` (config echo, seed and payload; no
timestamps, so equal configs give byte-identical files) and, for tabular
commands, ``result.csv``.  Exit codes: 0 success, 1 a checked property
failed (e.g. a knitting junction), 2 invalid configuration, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import estimators as E
from . import multiscale as M
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config, parse_override
from .geometry import build_knitting_layout, layout_invariants, verify_knitting
from .model import sample_boolean
from .reach import QuadratureError
from .regions import Rect
from .rng import RngStream, experiment_id
from .slice import slice_consistency
from .stats import jsonable

CSV_COLUMNS = {
    "sample": ["x", "y", "radius"],
    "sweep": ["lambda", "L", "phase", "reach", "successes", "trials", "point", "ci_lo", "ci_hi"],
    "recursion-check": ["alpha", "lambda", "kappa", "G_alpha", "lhs", "lhs_lo", "rhs", "rhs_hi", "slack", "verdict"],
    "summability": None,   # per-scale terms, columns taken from the report
    "vacancy-cert": None,
    "threshold": ["scale", "lambda", "p_hat", "ci_lo", "ci_hi", "trials", "above", "significant"],
    "lambda-d": ["lambda", "mean_D", "ci_lo", "ci_hi", "censored", "window", "unreliable"],
}


def _listify(v):
    return v if isinstance(v, list) else [v]


def _require(cfg: ExperimentConfig, *keys):
    for k in keys:
        if k not in cfg.values:
            raise ConfigError(k, f"required by '{cfg.command}'")


def _stream(cfg: ExperimentConfig) -> RngStream:
    return RngStream(cfg.seed, experiment_id(cfg.command))


def cmd_sample(cfg):
    _require(cfg, "lambda", "law")
    reg = cfg.get("region", {"lo": [0.0, 0.0], "hi": [10.0, 10.0]})
    g = sample_boolean(Rect(tuple(reg["lo"]), tuple(reg["hi"])), cfg.get("lambda"), cfg.law, _stream(cfg))
    rows = [{"x": c[0], "y": c[1], "radius": r} for c, r in zip(g.centers.tolist(), g.radii.tolist())]
    return {"n_grains": len(g), "grains": g.to_dict()}, rows, 0


def cmd_sweep(cfg):
    _require(cfg, "lambda", "law")
    rows = E.crossing_prob_sweep(sorted(_listify(cfg.get("lambda"))), cfg.get("L", 32.0), cfg.law,
                                 cfg.get("phase", "occupied"), cfg.get("n_reps", 1000), _stream(cfg),
                                 cfg.get("workers"))
    mono = E.monotone_consistent(rows, cfg.get("phase", "occupied") == "occupied")
    return {"rows": rows, "monotone_consistent": mono}, rows, 0


def cmd_recursion(cfg):
    _require(cfg, "lambda", "law")
    s = _stream(cfg)
    rows = []
    for i, lam in enumerate(_listify(cfg.get("lambda"))):
        for j, a in enumerate(_listify(cfg.get("alpha", 8.0))):
            rows.append(M.check_recursion(a, lam, cfg.law, cfg.get("kappa", 1e3), cfg.get("n_reps", 10_000),
                                          s.child(i, j), cfg.get("workers")))
    counts = {v: sum(r["verdict"] == v for r in rows) for v in ("consistent", "inconclusive", "violated")}
    return {"entries": rows, "counts": counts}, rows, 1 if counts["violated"] else 0


def _ladder(cfg):
    _require(cfg, "lambda", "law", "b")
    return M.ScaleLadder(cfg.get("b"), cfg.get("n_max", 3), cfg.get("lambda"), cfg.law, cfg.get("kappa", 1e3))


def cmd_summability(cfg):
    rep = M.summability_certificate(_ladder(cfg), cfg.get("n_empirical", 2), cfg.get("head_reps", cfg.get("n_reps", 10_000)),
                                    _stream(cfg), cfg.get("workers"))
    return rep.to_dict(), rep.terms, 0


def cmd_vacancy(cfg):
    rep = M.vacancy_certificate(_ladder(cfg), cfg.get("n_reps", 10_000), _stream(cfg), cfg.get("n_trunc"),
                                cfg.get("head_reps"), cfg.get("workers"))
    return rep.to_dict(), rep.terms, 0


def cmd_slice(cfg):
    _require(cfg, "lambda", "law")
    w = cfg.get("window", 20.0)
    rep = slice_consistency(cfg.get("lambda"), cfg.get("d", 3), cfg.law, Rect((0.0, 0.0), (w, w)),
                            cfg.get("n_reps", 250), _stream(cfg), cfg.get("brute_force", True), cfg.get("workers"))
    return rep, None, 0


def cmd_threshold(cfg):
    _require(cfg, "law")
    br = cfg.get("bracket")
    est = E.estimate_threshold(cfg.law, cfg.get("phase", "occupied"), _listify(cfg.get("scales", [32.0, 64.0])),
                               cfg.get("p_star", 0.5), cfg.get("tol", 0.04), cfg.get("budget"), _stream(cfg),
                               cfg.get("n_reps", 10_000), tuple(br) if br else None, cfg.get("workers"))
    return est.to_dict(), est.trace, 0


def cmd_lambda_d(cfg):
    _require(cfg, "lambda", "law")
    s = _stream(cfg)
    rows, ests = [], []
    for i, lam in enumerate(sorted(_listify(cfg.get("lambda")))):
        d = E.estimate_lambda_D(lam, cfg.law, cfg.get("k_max", 6), cfg.get("n_reps", 2000), s.child(i),
                                cfg.get("r0", 4.0), cfg.get("workers"))
        ests.append(d.to_dict())
        rows.append({"lambda": lam, "mean_D": d.mean.mean, "ci_lo": d.mean.ci_lo, "ci_hi": d.mean.ci_hi,
                     "censored": d.censored.point, "window": d.window, "unreliable": d.unreliable})
    payload = {"estimates": ests}
    if "censor_R" in cfg.values:
        br = E.censoring_bracket(cfg.law, cfg.get("censor_R"), cfg.get("censor_threshold", 0.2),
                                 cfg.get("tol", 0.04), cfg.get("n_reps", 2000), s.child("censoring"),
                                 tuple(cfg.get("bracket", [0.05, 0.6])), cfg.get("budget"), cfg.get("workers"))
        payload["censoring_bracket"] = br.to_dict()
    return payload, rows, 0


def cmd_e_event(cfg):
    _require(cfg, "lambda", "law")
    rep = E.estimate_E_event(cfg.get("lambda"), cfg.law, cfg.get("k_max", 20), cfg.get("n_reps", 2000),
                             _stream(cfg), cfg.get("workers"), cfg.get("tail_reps"))
    return rep, None, 0


def cmd_layout(cfg):
    lay = build_knitting_layout(cfg.get("alpha", 1.0), cfg.get("kappa", 1e6), cfg.get("h_step", 5.0))
    return lay.to_dict(), None, 0


def cmd_knitting(cfg):
    lay = build_knitting_layout(cfg.get("alpha", 1.0), cfg.get("kappa", 1e6), cfg.get("h_step", 5.0))
    rep = verify_knitting(lay)
    inv = layout_invariants(lay)
    ok = rep.passed and all(inv.values())
    return {"knitting": rep.to_dict(), "invariants": inv, "passed": ok}, None, 0 if ok else 1


HANDLERS = {
    "sample": cmd_sample, "sweep": cmd_sweep, "recursion-check": cmd_recursion, "summability": cmd_summability,
    "vacancy-cert": cmd_vacancy, "slice-check": cmd_slice, "threshold": cmd_threshold, "lambda-d": cmd_lambda_d,
    "e-event": cmd_e_event, "layout-dump": cmd_layout, "knitting-check": cmd_knitting,
}


def _csv_text(rows, columns) -> str:
    rows = [jsonable(r) for r in rows]
    if columns is None:
        columns = sorted({k for r in rows for k, v in r.items() if not isinstance(v, (dict, list))})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def result_payload(cfg: ExperimentConfig, payload) -> str:
    doc = {"config": cfg.echo(), "seed": cfg.seed, "result": jsonable(payload)}
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def run(cfg: ExperimentConfig) -> int:
    payload, rows, status = HANDLERS[cfg.command](cfg)
    out = Path(cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    fmt = cfg.get("format", "both")
    if fmt in ("json", "both"):
        (out / "result.json").write_text(result_payload(cfg, payload))
    if rows is not None and fmt in ("csv", "both"):
        (out / "result.csv").write_text(_csv_text(rows, CSV_COLUMNS.get(cfg.command)))
    overall = payload.get("overall") or payload.get("verdict") or payload.get("passed") \
        if isinstance(payload, dict) else None
    print(f"{cfg.command}: status {status}" + (f", verdict {overall}" if overall is not None else "")
          + f"; wrote {out / 'result.json'}")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boolperc", description="Boolean-model vacancy percolation lab")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", "-c", help="YAML or JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (dotted keys reach into the law, e.g. law.tau=3)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--n-reps", type=int, dest="n_reps")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(parse_override(s) for s in args.set)
        for key, val in (("seed", args.seed), ("out_dir", args.out), ("workers", args.workers),
                         ("n_reps", args.n_reps)):
            if val is not None:
                overrides[key] = val
        cfg = load_config(args.config, args.command, overrides)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
