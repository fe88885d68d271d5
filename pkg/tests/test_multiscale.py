import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boolperc import multiscale as M
from boolperc.geometry import make_strip, strip_sequence
from boolperc.laws import Exponential, Fixed, Pareto, Uniform, ZeroAtom
from boolperc.model import sample_reaching_grains
from boolperc.reach import far_field_mean, level_length, reach_mean
from boolperc.regions import Difference, Disc, Neighborhood, Rect
from boolperc.rng import RngStream

from oracles import grid_reach_mean


# ---------------------------------------------------------------- reach integrals

@given(t=st.floats(0.01, 20), w=st.floats(0.1, 10), h=st.floats(0.1, 10))
@settings(max_examples=60, deadline=None)
def test_level_length_full_curve(t, w, h):
    target = Rect((0, 0), (w, h))
    big = Disc((0, 0), 1e3)
    assert level_length(big, target, t) == pytest.approx(2 * (w + h) + 2 * math.pi * t, rel=1e-12)


def test_level_length_half_plane_cut():
    target = Rect((-1, -1), (1, 1))
    right = Rect((0, -100), (100, 100))
    t = 0.5
    assert level_length(right, target, t) == pytest.approx(0.5 * (8 + 2 * math.pi * t), rel=1e-12)


@pytest.mark.parametrize("case", ["rect_overlap", "annulus_pareto", "disc_uniform", "strip_diff_exp"])
def test_reach_mean_vs_grid_oracle(case):
    if case == "rect_overlap":
        target, source, law = Rect((0, 0), (2, 1)), Rect((1, -2), (5, 3)), Fixed(1.5)
    elif case == "annulus_pareto":
        target = make_strip(1.0)
        source, law = Difference(Disc((0, 0), 12.0), Neighborhood(target, 1.0)), Pareto(3.0, 0.5)
    elif case == "disc_uniform":
        target, source, law = Rect((0, 0), (1, 1)), Disc((3, 0.5), 2.0), Uniform(0.5, 3.0)
    else:
        target = make_strip(1.0)
        source, law = Difference(make_strip(4.0, "vertical"), make_strip(2.0, "vertical")), Exponential(1.0)
    exact = reach_mean(source, target, law, 0.7)
    ref = grid_reach_mean(source, target, law, 0.7, source.bbox(), n=2000)
    assert exact == pytest.approx(ref, rel=3e-3)


def test_reach_mean_matches_sampled_counts():
    target = make_strip(4.0)
    source = M.G_source(4.0, 10.0)[0]
    law = Pareto(3.0, 1.0)
    lam_mean = reach_mean(source, target, law, 0.1)
    counts = [len(sample_reaching_grains(source, target, 0.1, law, RngStream(3).child(i))) for i in range(3000)]
    se = math.sqrt(lam_mean / len(counts))
    assert abs(np.mean(counts) - lam_mean) < 4 * se


def test_reach_mean_fixed_closed_form():
    # Fixed(1) reaching a rectangle from a large square: area of its 1-neighbourhood
    target = Rect((0, 0), (10, 5))
    source = Rect((-50, -50), (50, 50))
    assert reach_mean(source, target, Fixed(1.0), 1.0) == pytest.approx(50 + 30 + math.pi, rel=1e-10)


def test_far_field_pareto_closed_form():
    tau, R, P = 3.5, 10.0, 22.0
    got = far_field_mean(Pareto(tau, 1.0), 0.2, P, R)
    want = 0.2 * (P * R ** (1 - tau) / (tau - 1) + 2 * math.pi * R ** (2 - tau) / (tau - 2))
    assert got == pytest.approx(want, rel=1e-8)
    assert far_field_mean(Fixed(1.0), 0.2, P, 2.0) == 0.0


# ---------------------------------------------------------------- G and its Markov bound

def test_markov_examples():
    assert M.markov_bound_G(2.0, 0.01, Pareto(3.0), 10.0) == pytest.approx(math.pi / 2)
    assert M.markov_bound_G(2.0, 0.5, Fixed(1.0), 10.0) == 0.0
    assert M.exact_G(2.0, 0.5, Fixed(1.0), 10.0) == 0.0


def test_exact_G_zero_when_reach_impossible():
    for a in (1.0, 3.0, 7.5):
        assert M.exact_G(a, 1.0, Fixed(a / 2), 10.0) == 0.0


@pytest.mark.parametrize("law", [Pareto(3.0), Pareto(2.5, 0.3), Exponential(1.0), ZeroAtom(0.5, Pareto(4.0))],
                         ids=lambda l: l.kind)
def test_exact_G_properties(law):
    for a in (1.0, 4.0):
        prev = 0.0
        for kappa in (10.0, 30.0, 100.0):
            g = M.exact_G(a, 0.05, law, kappa)
            assert g >= prev - 1e-15
            assert g <= M.markov_bound_G(a, 0.05, law, kappa)
            prev = g
        assert M.exact_G(a, 0.1, law, 10.0) >= M.exact_G(a, 0.05, law, 10.0)


def test_exact_G_increment_bounded_by_far_field():
    law, a, lam = Pareto(3.0), 2.0, 0.05
    g10, g100 = M.G_mean(a, lam, law, 10.0), M.G_mean(a, lam, law, 100.0)
    s = make_strip(a)
    # grains centred outside B(10 a) are farther than 10 a - half-diagonal from the strip
    r = 10 * a - math.hypot(5 * a, a / 2)
    assert g100 - g10 <= far_field_mean(law, lam, s.perimeter, r) + 1e-12


def test_exact_G_vs_monte_carlo():
    law = Pareto(3.0)
    exact = M.exact_G(4.0, 0.1, law, 10.0)
    mc = M.mc_G(4.0, 0.1, law, 10.0, 4000, RngStream(8))
    assert mc.ci_lo <= exact <= mc.ci_hi


def test_markov_tail_sum_pareto():
    law, b, lam, kappa = Pareto(3.0), 8.0, 0.02, 10.0
    direct = sum(M.markov_bound_G(10.0 ** n * b, lam, law, kappa) for n in range(4, 40))
    assert M.markov_tail_sum(b, 4, lam, law, kappa) == pytest.approx(direct, rel=1e-9)
    assert M.markov_tail_sum(b, 1, lam, Pareto(2.0), kappa) == math.inf
    assert M.markov_tail_sum(b, 1, lam, Fixed(1.0), kappa) == 0.0


def test_g_tail_small_for_pareto():
    # C1^2 times the Markov tail beyond n_max; shrinks by 10 per scale for tau = 3
    t = M.C1 ** 2 * M.markov_tail_sum(8.0, 11, 0.02, Pareto(3.0), 10.0)
    assert t < 1e-3
    assert M.C1 ** 2 * M.markov_tail_sum(8.0, 12, 0.02, Pareto(3.0), 10.0) == pytest.approx(t / 10, rel=1e-9)


# ---------------------------------------------------------------- F and the recursion

def test_F_limits():
    tiny = M.estimate_F(4.0, 1e-9, Fixed(1.0), 500, RngStream(1))
    assert tiny.successes == 0
    s = make_strip(4.0)
    lam = 200 / Neighborhood(s, 4.0).measure()
    dense = M.estimate_F(4.0, lam, Fixed(4.0), 500, RngStream(2))
    assert dense.point > 0.99
    with pytest.raises(ValueError):
        M.estimate_F(4.0, 0.1, Fixed(1.0), 0)


@pytest.mark.parametrize("s", [2.0, 4.0])
def test_F_scaling_invariance(s):
    a, lam, law = 4.0, 0.15, Fixed(1.0)
    f1 = M.estimate_F(a, lam, law, 3000, RngStream(5))
    f2 = M.estimate_F(s * a, lam / s ** 2, law.scaled(s), 3000, RngStream(6))
    se = math.sqrt(f1.point * (1 - f1.point) / 3000 + f2.point * (1 - f2.point) / 3000)
    assert 0.05 < f1.point < 0.95
    assert abs(f1.point - f2.point) < 1.96 * se * 1.5


def test_recursion_trivially_consistent():
    r = M.check_recursion(4.0, 0.2, Fixed(1.0), 1e3, 2000, RngStream(4))
    assert r["verdict"] == "consistent"
    if r["F_alpha"]["point"] >= 0.028:
        assert r["rhs"] > 1
    tiny = M.check_recursion(4.0, 1e-6, Fixed(1.0), 1e3, 200, RngStream(4))
    assert tiny["verdict"] == "consistent"


# ---------------------------------------------------------------- bound chain

def test_bound_chain_geometric_exact():
    f0 = Fraction(1, 9)
    ch = M.bound_chain(f0, [Fraction(0)] * 6)
    assert ch.applicable
    assert ch.f_bounds == [Fraction(1, 9 ** (n + 1)) for n in range(1, 7)]
    assert ch.sum_f == Fraction(1, 72)
    fl = M.bound_chain(1 / 9, [0.0] * 6)
    assert fl.sum_f == 1 / 72


def test_bound_chain_coarse_total():
    ch = M.bound_chain(Fraction(1, 9), [Fraction(1, 81)])
    assert ch.coarse_total == Fraction(5, 81)
    assert ch.total <= Fraction(5, 81) < Fraction(1, 2)


def test_bound_chain_not_applicable():
    assert not M.bound_chain(0.2, [0.0]).applicable
    assert not M.bound_chain(0.1, [0.02]).applicable
    with pytest.raises(ValueError):
        M.bound_chain(0.1, [-0.01])


@given(f0=st.fractions(0, Fraction(1, 9)), g=st.lists(st.fractions(0, Fraction(1, 500)), max_size=6))
@settings(max_examples=100, deadline=None)
def test_bound_chain_dominates_recursion(f0, g):
    ch = M.bound_chain(f0, g)
    if not ch.applicable:
        return
    f = f0
    for k, gk in enumerate(g):
        f = f / 9 + gk
        assert ch.f_bounds[k] == f
    assert sum(ch.f_bounds, Fraction(0)) <= ch.sum_f


# ---------------------------------------------------------------- ladders and certificates

def test_ladder_validation():
    lad = M.ScaleLadder(8.0, 3, 0.02, Fixed(1.0), 1e3)
    assert lad.scales == [80.0, 800.0, 8000.0]
    with pytest.raises(ValueError):
        M.ScaleLadder(8.0, 3, 0.02, Fixed(1.0), 5.0)
    with pytest.raises(ValueError):
        M.ScaleLadder(-1.0, 3, 0.02, Fixed(1.0), 1e3)


def test_strip_nesting_and_crossing():
    s = strip_sequence(1.0, 5)
    assert (s[0].lo, s[0].hi) == ((-50, -5), (50, 5))
    assert (s[1].lo, s[1].hi) == ((-50, -500), (50, 500))
    for n in range(len(s) - 2):
        assert s[n + 2].contains_rect(s[n])
    from boolperc.geometry import crosses_short_way
    for n in range(len(s) - 1):
        assert crosses_short_way(s[n + 1], s[n])


def test_J_zero_and_below_G():
    lad = M.ScaleLadder(8.0, 1, 0.02, Fixed(1.0), 1e3)
    assert M.exact_J(1, lad) == 0.0
    lad = M.ScaleLadder(1.0, 1, 0.05, Pareto(2.5), 1e6)
    assert 0 < M.exact_J(1, lad) <= M.exact_G(10.0, 0.05, Pareto(2.5), 1e6)


def test_H_J_tiny_lambda():
    lad = M.ScaleLadder(1.0, 1, 1e-6, Fixed(1.0), 1e3)
    r = M.estimate_H_J(1, lad, 200, RngStream(3))
    assert r["verdict"] == "consistent" and r["H"]["successes"] == 0


def test_summability_near_critical_fails():
    lad = M.ScaleLadder(8.0, 1, 0.36, Fixed(1.0), 1e3)
    rep = M.summability_certificate(lad, 1, 200, RngStream(2))
    assert rep.overall == "FAIL" and rep.summary["head"] > 0.5


def test_vacancy_near_critical_uninformative():
    lad = M.ScaleLadder(8.0, 1, 0.36, Fixed(1.0), 1e3)
    rep = M.vacancy_certificate(lad, 100, RngStream(2), n_trunc=1, head_reps=100)
    assert rep.overall == "UNINFORMATIVE" and rep.summary["bound"] <= 0


@pytest.mark.slow
def test_vacancy_without_head_terms():
    lad = M.ScaleLadder(8.0, 0, 0.02, Fixed(1.0), 1e3)
    rep = M.vacancy_certificate(lad, 10, RngStream(2), head_reps=60_000)
    assert rep.params["n_trunc"] == 0 and rep.terms == []
    assert rep.summary["bound"] == pytest.approx(1.0 - rep.summary["tail"])
    assert rep.summary["bound"] <= 1.0


def test_certificate_serialization():
    lad = M.ScaleLadder(8.0, 1, 0.36, Fixed(1.0), 1e3)
    rep = M.summability_certificate(lad, 1, 50, RngStream(2))
    import json
    d = json.loads(rep.to_json())
    assert d["kind"] == "summability" and d["params"]["C1"] == 1369
    header = rep.to_csv().splitlines()[0].split(",")
    assert {"n", "scale", "F_hat", "G"} <= set(header)
