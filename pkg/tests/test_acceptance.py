"""Acceptance criteria 1-13, each at its stated tolerance.

Run with ``pytest -m acceptance -s`` to see the per-criterion lines as they
happen; a summary section is printed at the end of every run.
"""
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from boolperc import cli
from boolperc import estimators as E
from boolperc import multiscale as M
from boolperc.config import load_config
from boolperc.geometry import build_knitting_layout, layout_invariants, verify_knitting
from boolperc.laws import Fixed, Pareto
from boolperc.model import GrainSet, sample_boolean, sample_reaching_grains
from boolperc.percolation import CrossingQuery, build_components, occupied_crossing, vacant_crossing, vacant_fraction
from boolperc.regions import Disc, Neighborhood, Rect
from boolperc.rng import RngStream
from boolperc.slice import slice_consistency
from boolperc.stats import jsonable

from oracles import bfs_components, flood_fill_crossing

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "configs" / "golden_subcritical.yaml"
SEED = 20240601


def payload(obj) -> bytes:
    return json.dumps(jsonable(obj), sort_keys=True).encode()


def golden_ladder():
    cfg = load_config(str(GOLDEN), "vacancy-cert")
    return M.ScaleLadder(cfg.get("b"), cfg.get("n_max"), cfg.get("lambda"), cfg.law, cfg.get("kappa")), cfg


# ---------------------------------------------------------------- 1

def _random_config(i):
    rng = np.random.default_rng([SEED, 1, i])
    lam = rng.uniform(0.05, 1.0)
    if rng.random() < 0.5:
        law = Fixed(rng.uniform(0.2, 1.5))
    else:
        law = Pareto(rng.uniform(2.2, 5.0), rng.uniform(0.2, 0.8))
    w, h = rng.uniform(0.5, 8.0, 2)
    if abs(w - h) < 1e-3:
        w += 0.5
    rect = Rect((0, 0), (w, h))
    reach = law.sup if math.isfinite(law.sup) else None
    if reach is None:
        gs = sample_reaching_grains(Neighborhood(rect, 200.0), rect, lam, law, RngStream(SEED, 1).child(i))
    else:
        gs = sample_boolean(Neighborhood(rect, reach), lam, law, RngStream(SEED, 1).child(i))
    return rect, gs


def test_criterion_01_duality(report):
    n, good = 10_000, 0
    for i in range(n):
        rect, gs = _random_config(i)
        ok = True
        for occ_dir, vac_dir in (("short", "long"), ("long", "short")):
            occ = occupied_crossing(CrossingQuery(rect, occ_dir, "occupied", gs)).crossed
            vac = vacant_crossing(CrossingQuery(rect, vac_dir, "vacant", gs)).crossed
            ok &= occ != vac
        good += ok
    assert report(1, good == n, f"duality XOR held in {good}/{n} random configurations")


# ---------------------------------------------------------------- 2

def test_criterion_02_oracles(report):
    comp_ok = 0
    for i in range(1000):
        rng = np.random.default_rng([SEED, 2, i])
        k = int(rng.integers(1, 51))
        c = rng.uniform(0, 10, (k, 2))
        r = rng.uniform(0, 1.5, k)
        r[rng.random(k) < 0.1] = 0.0
        got = {frozenset(cl) for cl in build_components(GrainSet(c, r)).classes}
        comp_ok += got == bfs_components(c.tolist(), r.tolist())

    # crossings vs the pixel flood fill at pitch h; a disagreement is allowed only
    # inside the oracle's resolution band, i.e. where pixel(r - h) != pixel(r + 1.5 h)
    from boolperc.laws import Uniform
    law, h, n = Uniform(0.5, 1.2), 0.01, 200
    agree, out_of_band = 0, 0
    rect = Rect((0, 0), (6, 4))
    for i in range(n):
        gs = sample_boolean(Neighborhood(rect, law.sup), 0.35, law, RngStream(SEED, 2).child(i))
        c, r = gs.centers.tolist(), gs.radii
        exact = occupied_crossing(CrossingQuery(rect, "x", "occupied", gs)).crossed
        if exact == flood_fill_crossing(c, r, rect, 0, h):
            agree += 1
        elif flood_fill_crossing(c, r - h, rect, 0, h) == flood_fill_crossing(c, r + 1.5 * h, rect, 0, h):
            out_of_band += 1
    ok = comp_ok == 1000 and agree / n >= 0.995 and out_of_band == 0
    assert report(2, ok, f"components {comp_ok}/1000 exact; crossings agree {agree}/{n}, "
                         f"{out_of_band} disagreements outside the oracle band")


# ---------------------------------------------------------------- 3

def _layout_payload(alpha):
    lay = build_knitting_layout(alpha)
    rep = verify_knitting(lay)
    inv = layout_invariants(lay)
    # exact disjointness of alpha-neighbourhoods between the two halves, in rationals
    a = Fraction(alpha)
    lower, upper = lay.rects[:37], lay.rects[37:]
    gap = min(Fraction(u.lo[1]) - Fraction(l.hi[1]) for l in lower for u in upper)
    return {"alpha": alpha, "knitting": rep.to_dict(), "invariants": inv, "exact_disjoint": gap > 2 * a,
            "layout": lay.to_dict()}


def test_criterion_03_layout(report):
    res = [_layout_payload(a) for a in (1.0, 2.5, 8.0)]
    ok = all(r["knitting"]["passed"] and all(r["invariants"].values()) and r["exact_disjoint"] for r in res)
    n_j = sum(len(r["knitting"]["junctions"]) + len(r["knitting"]["ends"]) for r in res)
    assert report(3, ok, f"invariants and {n_j} knitting checks over alpha in (1, 2.5, 8)")


# ---------------------------------------------------------------- 4

def test_criterion_04_recursion(report):
    law = Fixed(1.0)
    verdicts = {}
    for i, lam in enumerate((0.01, 0.02, 0.04)):
        for j, alpha in enumerate((4.0, 8.0, 16.0)):
            rep = M.check_recursion(alpha, lam, law, 1e3, 10_000, RngStream(SEED, 4).child(i, j))
            verdicts[(lam, alpha)] = rep["verdict"]
    n_cons = sum(v == "consistent" for v in verdicts.values())
    n_viol = sum(v == "violated" for v in verdicts.values())
    assert report(4, n_cons == 9 and n_viol == 0,
                  f"{n_cons}/9 consistent, {n_viol} violated on the (lambda, alpha) grid")


# ---------------------------------------------------------------- 5

MC_POINTS = [(4.0, 0.1, 10.0), (2.0, 0.1, 10.0), (8.0, 0.05, 10.0), (4.0, 0.02, 100.0), (1.0, 0.2, 10.0)]


def _mc_G_payload(k):
    alpha, lam, kappa = MC_POINTS[k]
    law = Pareto(3.0)
    est = M.mc_G(alpha, lam, law, kappa, 4000, RngStream(SEED, 5).child(k))
    return {"exact": M.exact_G(alpha, lam, law, kappa), "mc": est.to_dict()}


def test_criterion_05_markov(report):
    law = Pareto(3.0)
    grid_ok = 0
    for alpha in (0.5, 1.0, 4.0, 16.0, 64.0):
        for lam in (0.02, 0.2):
            for kappa in (10.0, 1e3):
                grid_ok += M.exact_G(alpha, lam, law, kappa) <= M.markov_bound_G(alpha, lam, law, kappa)
    mc_ok = 0
    for k in range(len(MC_POINTS)):
        p = _mc_G_payload(k)
        mc_ok += p["mc"]["ci_lo"] <= p["exact"] <= p["mc"]["ci_hi"]
    ok = grid_ok == 20 and mc_ok == len(MC_POINTS)
    assert report(5, ok, f"exact <= Markov on {grid_ok}/20 grid points; MC CI covers exact at {mc_ok}/5")


# ---------------------------------------------------------------- 6

def _chain_payload():
    c = M.bound_chain(Fraction(1, 9), [Fraction(1, 81)], 9)
    z = M.bound_chain(1 / 9, [0.0] * 30, 9)
    return {"chain": c.to_dict(), "zero": z.to_dict(), "c": c, "z": z}


def test_criterion_06_bound_chain(report):
    p = _chain_payload()
    c, z = p["c"], p["z"]
    ok = c.applicable and c.total <= Fraction(5, 81) and c.coarse_total == Fraction(5, 81)
    # with g = 0 the chain is f_n = 9^-(n+1) and the geometric sum is exactly 1/72
    ok &= z.sum_f == 1 / 72 and all(math.isclose(f, 9.0 ** -(n + 2), rel_tol=1e-14) for n, f in enumerate(z.f_bounds))
    assert report(6, ok, f"total {c.total} <= 5/81, coarse total {c.coarse_total}; g = 0 gives sum f = {z.sum_f!r}")


# ---------------------------------------------------------------- 7

def test_criterion_07_vacancy(report, tmp_path):
    code = cli.main(["vacancy-cert", "-c", str(GOLDEN), "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "result.json").read_text())
    bound = doc["result"]["summary"]["bound"]
    ok = code == 0 and bound >= 0.5 and doc["result"]["overall"] == "PASS"
    assert report(7, ok, f"golden vacancy lower bound {bound:.6f} (exit {code})")


# ---------------------------------------------------------------- 8

def _hj_payload():
    ladder, cfg = golden_ladder()
    return M.estimate_H_J(1, ladder, 10_000, RngStream(cfg.seed, 8))


def test_criterion_08_H_J(report):
    rep = _hj_payload()
    ok = rep["verdict"] == "consistent" and rep["union_lo"] <= rep["rhs_hi"]
    assert report(8, ok, f"P[H1 or J1] = {rep['union']:.3g} (lower {rep['union_lo']:.3g}) vs "
                         f"F + G upper {rep['rhs_hi']:.3g}: {rep['verdict']}")


# ---------------------------------------------------------------- 9 and 12

@pytest.fixture(scope="module")
def thresholds():
    law = Fixed(1.0)
    occ = E.estimate_threshold(law, "occupied", [64.0], tol=0.04, n_reps=10_000, rng=RngStream(SEED, 9).child(0))
    vac = E.estimate_threshold(law, "vacant", [64.0], tol=0.04, n_reps=10_000, rng=RngStream(SEED, 9).child(1))
    return occ, vac


def test_criterion_09_thresholds(report, thresholds):
    occ, vac = thresholds
    ok = occ.width <= 0.04 and vac.width <= 0.04 and occ.overlaps(vac) and not occ.warning and not vac.warning
    assert report(9, ok, f"occupied [{occ.lam_lo:.4f}, {occ.lam_hi:.4f}], vacant [{vac.lam_lo:.4f}, "
                         f"{vac.lam_hi:.4f}] at L = 64")


# ---------------------------------------------------------------- 10

def test_criterion_10_slice(report):
    w = Rect((0, 0), (20, 20))
    rep = slice_consistency(0.5, 3, Fixed(1.0), w, 260, RngStream(SEED, 10))
    d = rep["direct"]
    ok = abs(rep["ratio_hat"] - 2.0) <= 0.02 and abs(d["mean_sigma2"] - 2 / 3) <= 0.007 and rep["agree"]
    ok &= d["count"] >= 100_000
    assert report(10, ok, f"lambda'/lambda = {rep['ratio_hat']:.4f}, E[sigma^2] = {d['mean_sigma2']:.4f} "
                          f"from {d['count']} grains; brute force agrees: {rep['agree']}")


# ---------------------------------------------------------------- 11

def _coverage_payload(tau, R, n=200):
    w = Rect((0, 0), (10, 10))
    vals = []
    for i in range(n):
        g = sample_reaching_grains(Disc((5.0, 5.0), R), w, 0.05, Pareto(tau), RngStream(SEED, 11).child(i))
        vals.append(vacant_fraction(w, g, 2000, RngStream(SEED, 11).child(1, i)).point)
    return {"tau": tau, "R": R, "mean": float(np.mean(vals)), "se": float(np.std(vals, ddof=1) / math.sqrt(n))}


def test_criterion_11_coverage(report):
    heavy = [_coverage_payload(1.8, R) for R in (1e2, 1e3, 1e4)]
    light = [_coverage_payload(4.0, R) for R in (1e2, 1e3, 1e4)]
    means = [p["mean"] for p in heavy]
    ok = means[0] > means[1] >= means[2] and means[2] < 0.01
    # Pareto(4) has finite second moment: the vacant fraction stays at exp(-lambda pi E[rho^2])
    target = math.exp(-0.05 * math.pi * 2.0)
    ok &= all(p["mean"] > 0 and abs(p["mean"] - target) <= 3 * p["se"] for p in light)
    ok &= max(p["mean"] for p in light) - min(p["mean"] for p in light) <= 3 * max(p["se"] for p in light)
    assert report(11, ok, "tau = 1.8 vacant fraction " + ", ".join(f"{m:.4g}" for m in means)
                  + "; tau = 4 " + ", ".join(f"{p['mean']:.3f}" for p in light) + f" (limit {target:.3f})")


# ---------------------------------------------------------------- 12

def test_criterion_12_ordering(report, thresholds):
    occ, vac = thresholds
    blow = E.censoring_bracket(Fixed(1.0), R=16.0, threshold=0.2, tol=0.04, n_reps=2000, rng=RngStream(SEED, 12))
    ok = blow.lam_lo <= occ.lam_hi and occ.lam_lo <= vac.lam_hi
    assert report(12, ok, f"blow-up [{blow.lam_lo:.4f}, {blow.lam_hi:.4f}] <= occupied [{occ.lam_lo:.4f}, "
                          f"{occ.lam_hi:.4f}] <= vacant upper {vac.lam_hi:.4f}")


# ---------------------------------------------------------------- 13

def test_criterion_13_determinism(report, tmp_path):
    checks = {
        "layout": lambda: payload(_layout_payload(2.5)),
        "chain": lambda: payload(_chain_payload()["chain"]),
        "markov_mc": lambda: payload(_mc_G_payload(0)),
        "H_J": lambda: payload(_hj_payload()),
        "coverage": lambda: payload(_coverage_payload(1.8, 1e3, 50)),
    }
    same = {k: fn() == fn() for k, fn in checks.items()}
    args = ["recursion-check", "-c", str(GOLDEN), "--set", "alpha=4", "--n-reps", "2000"]
    outs = []
    for name in ("a", "b"):
        assert cli.main(args + ["--out", str(tmp_path / name)]) in (0, 1)
        outs.append((tmp_path / name / "result.json").read_bytes() + (tmp_path / name / "result.csv").read_bytes())
    same["cli"] = outs[0] == outs[1]
    assert report(13, all(same.values()), "byte-identical reruns: " + ", ".join(f"{k}={v}" for k, v in same.items()))
