"""Finite-size proxies for the critical intensities and for the diameter events.

Thresholds are reported as brackets on a given scale together with the full
probe trace, never as a single number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .laws import RadiusLaw
from .mc import run_replicates
from .model import GrainSet, sample_boolean, sample_reaching_grains
from .percolation import build_components, members_meeting, occupied_crosses, union_diameter
from .reach import far_field_mean
from .regions import Neighborhood, Rect
from .rng import RngStream, as_stream
from .stats import BernoulliEstimate, MeanEstimate, jsonable

MISS_PROB = 1e-4


# ---------------------------------------------------------------- crossing probes

def probe_reach(law: RadiusLaw, lam: float, L: float, miss_prob: float = MISS_PROB) -> float:
    """Radius of the neighbourhood whose grains decide crossings of an ``L x L`` square.

    Bounded laws: the radius bound (exact).  Otherwise the smallest dyadic
    multiple of the typical radius beyond which the expected number of grains
    still touching the square is below ``miss_prob``.
    """
    if math.isfinite(law.sup):
        return law.sup
    if not math.isfinite(law.moment(2)):
        raise ValueError("E[rho^2] is infinite: grains from arbitrarily far away cover the square")
    t = law.typical()
    while far_field_mean(law, lam, 4 * L, t) > miss_prob:
        t *= 2.0
    return t


def _square_sample(stream: RngStream, L, lam, law, reach):
    sq = Rect((0.0, 0.0), (L, L))
    src = Neighborhood(sq, reach) if reach > 0 else sq
    return sq, sample_reaching_grains(src, sq, lam, law, stream.generator())


def _cross_rep(stream: RngStream, L, lam, law, phase, reach):
    sq, g = _square_sample(stream, L, lam, law, reach)
    cx, cy = np.ascontiguousarray(g.centers[:, 0]), np.ascontiguousarray(g.centers[:, 1])
    if phase == "occupied":
        return occupied_crosses(cx, cy, g.radii, sq, 0)
    # vacant left-right crossing <=> no occupied bottom-top crossing
    return not occupied_crosses(cx, cy, g.radii, sq, 1)


def crossing_probability(lam: float, L: float, law: RadiusLaw, phase: str, n_reps: int, rng=None,
                         workers: Optional[int] = None) -> BernoulliEstimate:
    """Left-right crossing probability of ``[0, L]^2`` in the given phase."""
    if phase not in ("occupied", "vacant"):
        raise ValueError("phase must be 'occupied' or 'vacant'")
    stream = as_stream(rng)
    reach = probe_reach(law, lam, L)
    hits = run_replicates(_cross_rep, stream, n_reps, (L, lam, law, phase, reach), workers)
    return BernoulliEstimate.from_counts(int(hits.sum()), n_reps, stream.record())


def crossing_prob_sweep(lam_grid, L: float, law: RadiusLaw, phase: str, n_reps: int, rng=None,
                        workers: Optional[int] = None) -> list[dict]:
    grid = list(lam_grid)
    if grid != sorted(grid):
        raise ValueError("lambda grid must be sorted")
    stream = as_stream(rng)
    rows = []
    for i, lam in enumerate(grid):
        est = crossing_probability(lam, L, law, phase, n_reps, stream.child(i))
        rows.append({"lambda": lam, "L": L, "phase": phase, "reach": probe_reach(law, lam, L), **est.to_dict()})
    return rows


def monotone_consistent(rows: list[dict], increasing: bool = True) -> bool:
    """No pair ``lam1 < lam2`` whose intervals are strictly ordered against the expected direction."""
    rows = sorted(rows, key=lambda r: r["lambda"])
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            if b["lambda"] <= a["lambda"]:
                continue
            if increasing and a["ci_lo"] > b["ci_hi"]:
                return False
            if not increasing and b["ci_lo"] > a["ci_hi"]:
                return False
    return True


# ---------------------------------------------------------------- stochastic bisection

@dataclass
class ThresholdEstimate:
    lam_lo: float
    lam_hi: float
    p_star: float
    scale: float
    trials_per_probe: int
    phase: str
    trace: list = field(default_factory=list)
    brackets: dict = field(default_factory=dict)
    warning: str = ""
    samples_used: int = 0

    @property
    def width(self) -> float:
        return self.lam_hi - self.lam_lo

    def overlaps(self, other: "ThresholdEstimate") -> bool:
        return self.lam_lo <= other.lam_hi and other.lam_lo <= self.lam_hi

    def to_dict(self):
        return jsonable({**self.__dict__, "width": self.width})


def bisect_probability(probe: Callable[[float, RngStream], BernoulliEstimate], lo: float, hi: float,
                       p_star: float, tol: float, increasing: bool, stream: RngStream,
                       budget: Optional[int], used: int = 0, label=None, max_expand: int = 6):
    """Stochastic bisection on a monotone probability curve.

    Each probe decides by its point estimate; the trace records whether its
    interval actually excluded ``p_star``.  Endpoints are probed first and the
    bracket is widened geometrically until it is valid.
    """
    trace = []
    k = 0
    warning = ""

    def run(lam):
        nonlocal k, used
        est = probe(lam, stream.child(k))
        k += 1
        used += est.trials
        above = est.point >= p_star
        row = {"scale": label, "lambda": lam, "p_hat": est.point, "ci_lo": est.ci_lo, "ci_hi": est.ci_hi,
               "trials": est.trials, "above": above,
               "significant": est.ci_lo > p_star or est.ci_hi < p_star}
        trace.append(row)
        return above

    # validity of the initial bracket
    for _ in range(max_expand):
        low_side = run(lo)
        if low_side == (not increasing):
            break
        lo /= 2.0
    else:
        warning = "lower bracket end never validated"
    for _ in range(max_expand):
        high_side = run(hi)
        if high_side == increasing:
            break
        hi *= 2.0
    else:
        warning = warning or "upper bracket end never validated"

    while hi - lo > tol:
        if budget is not None and used >= budget:
            warning = warning or "budget exhausted"
            break
        mid = 0.5 * (lo + hi)
        above = run(mid)
        if above == increasing:
            hi = mid
        else:
            lo = mid
    return lo, hi, trace, used, warning


def estimate_threshold(law: RadiusLaw, phase: str, scales, p_star: float = 0.5, tol: float = 0.04,
                       budget: Optional[int] = None, rng=None, n_reps: int = 10_000,
                       bracket: Optional[tuple] = None, workers: Optional[int] = None) -> ThresholdEstimate:
    """Bracket the intensity at which the square crossing probability equals ``p_star``, scale by scale.

    Occupied crossings increase in lambda and vacant ones decrease.  The
    returned bracket is that of the largest scale; ``brackets`` holds every
    scale (the drift trace).
    """
    if phase not in ("occupied", "vacant"):
        raise ValueError("phase must be 'occupied' or 'vacant'")
    if law.zero_mass >= 1.0:
        raise ValueError("the radius law must put mass < 1 at zero")
    scales = sorted(scales)
    if not scales:
        raise ValueError("need at least one scale")
    stream = as_stream(rng)
    if bracket is None:
        m2 = law.moment(2)
        # Gilbert-disc heuristic, lambda * pi * E[rho^2] ~ 1.13 at threshold
        guess = 1.128 / (math.pi * m2) if math.isfinite(m2) and m2 > 0 else 0.1
        bracket = (guess / 3.0, guess * 3.0)
    increasing = phase == "occupied"
    trace, brackets = [], {}
    used, warning = 0, ""
    lo, hi = bracket
    for L in scales:
        probe = lambda lam, s, L=L: crossing_probability(lam, L, law, phase, n_reps, s, workers)
        lo_L, hi_L, tr, used, w = bisect_probability(probe, bracket[0], bracket[1], p_star, tol, increasing,
                                                     stream.child("scale", int(L * 1000)), budget, used, L)
        trace.extend(tr)
        brackets[str(L)] = [lo_L, hi_L]
        warning = warning or w
        lo, hi = lo_L, hi_L
    return ThresholdEstimate(lo, hi, p_star, scales[-1], n_reps, phase, trace, brackets, warning, used)


def trace_monotone_consistent(est: ThresholdEstimate) -> bool:
    ok = True
    for L in est.brackets:
        rows = [r for r in est.trace if str(r["scale"]) == L]
        ok &= monotone_consistent(rows, increasing=est.phase == "occupied")
    return ok


# ---------------------------------------------------------------- diameters

def unit_interval(k: int) -> Rect:
    return Rect((float(k), 0.0), (float(k + 1), 0.0))


def _censor_margin(law: RadiusLaw) -> float:
    return law.sup if math.isfinite(law.sup) else 0.0


def _diameter_window(R: float, k_hi: int = 0) -> Rect:
    return Rect((-R, -R), (k_hi + 1.0 + R, R))


def _censored(grains: GrainSet, idx: np.ndarray, window: Rect, margin: float) -> bool:
    """Whether some member disc comes within ``margin`` of the window boundary."""
    if len(idx) == 0:
        return False
    c, r = grains.centers[idx], grains.radii[idx] + margin
    (x0, y0), (x1, y1) = window.lo, window.hi
    return bool(np.any((c[:, 0] - r <= x0) | (c[:, 0] + r >= x1) | (c[:, 1] - r <= y0) | (c[:, 1] + r >= y1)))


def _diam_rep(stream: RngStream, lam, law, R):
    window = _diameter_window(R)
    g = sample_boolean(window, lam, law, stream.generator())
    seed = unit_interval(0)
    comps = build_components(g)
    idx = members_meeting(g, comps, seed)
    D = union_diameter(seed, g.centers[idx], g.radii[idx])
    return D, _censored(g, idx, window, _censor_margin(law))


@dataclass
class DiameterEstimate:
    lam: float
    mean: MeanEstimate
    censored: BernoulliEstimate
    window: float
    unreliable: bool
    trace: list
    samples: Optional[np.ndarray] = None
    censored_flags: Optional[np.ndarray] = None

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k not in ("samples", "censored_flags")}
        return jsonable(d)


def diameter_samples(lam: float, law: RadiusLaw, R: float, n_reps: int, rng=None,
                     workers: Optional[int] = None):
    stream = as_stream(rng)
    out = run_replicates(_diam_rep, stream, n_reps, (lam, law, R), workers)
    return out[:, 0].astype(float), out[:, 1].astype(bool)


def estimate_lambda_D(lam: float, law: RadiusLaw, k_max: int = 6, n_reps: int = 2000, rng=None,
                      r0: float = 4.0, workers: Optional[int] = None) -> DiameterEstimate:
    """Mean diameter of ``W_0`` (``I_0`` plus the components meeting it), with censoring diagnostic.

    Grains are centred within distance ``R`` of ``I_0``; ``R`` starts at
    ``r0`` and doubles (at most ``k_max`` times) until at most 1% of
    replicates have a member disc within the law's radius bound of the
    window boundary.  Censored replicates contribute their observed
    diameter, a lower bound, so the mean is biased low when censoring is
    present; above 20% censoring the estimate is flagged unreliable.
    """
    if law.zero_mass >= 1.0:
        raise ValueError("the radius law must put mass < 1 at zero")
    stream = as_stream(rng)
    R = r0
    trace = []
    for j in range(k_max + 1):
        D, cens = diameter_samples(lam, law, R, n_reps, stream.child("window", j), workers)
        c_est = BernoulliEstimate.from_counts(int(cens.sum()), n_reps)
        trace.append({"R": R, "censored": c_est.point, "mean_D": float(D.mean())})
        if c_est.point <= 0.01 or j == k_max:
            break
        R *= 2.0
    return DiameterEstimate(lam, MeanEstimate.from_samples(D.tolist()), c_est, R, c_est.point > 0.2, trace, D, cens)


def _censor_rep(stream: RngStream, lam, law, R):
    return _diam_rep(stream, lam, law, R)[1]


def censoring_probability(lam: float, law: RadiusLaw, R: float, n_reps: int, rng=None,
                          workers: Optional[int] = None) -> BernoulliEstimate:
    stream = as_stream(rng)
    hits = run_replicates(_censor_rep, stream, n_reps, (lam, law, R), workers)
    return BernoulliEstimate.from_counts(int(hits.sum()), n_reps, stream.record())


def censoring_bracket(law: RadiusLaw, R: float = 16.0, threshold: float = 0.2, tol: float = 0.04,
                      n_reps: int = 2000, rng=None, bracket: tuple = (0.05, 0.6),
                      budget: Optional[int] = None, workers: Optional[int] = None) -> ThresholdEstimate:
    """Bracket where the censoring frequency at window ``R`` reaches ``threshold``.

    The cluster of ``I_0`` only grows when grains are added, so censoring is
    increasing in lambda and the same bisection applies.  This is the
    blow-up proxy for the onset of infinite mean diameter.
    """
    stream = as_stream(rng)
    probe = lambda lam, s: censoring_probability(lam, law, R, n_reps, s, workers)
    lo, hi, trace, used, w = bisect_probability(probe, bracket[0], bracket[1], threshold, tol, True,
                                                stream, budget, 0, R)
    return ThresholdEstimate(lo, hi, threshold, R, n_reps, "censoring", trace, {str(R): [lo, hi]}, w, used)


# ---------------------------------------------------------------- the event E

def segment_void_probability(lam: float, law: RadiusLaw, length: float) -> float:
    """``P[no grain meets a segment of given length]`` by the Steiner formula of its neighbourhood."""
    return math.exp(-lam * (2.0 * length * law.moment(1) + math.pi * law.moment(2)))


def _E_rep(stream: RngStream, lam, law, k_max, M):
    window = _diameter_window(M, k_max)
    g = sample_boolean(window, lam, law, stream.generator())
    margin = _censor_margin(law)
    comps = build_components(g)
    if len(members_meeting(g, comps, Rect((0.0, 0.0), (2.0, 0.0)))):
        return False, False
    for k in range(2, k_max + 1):
        seed = unit_interval(k)
        idx = members_meeting(g, comps, seed)
        if len(idx) == 0:
            continue
        # a censored component counts as a failure, keeping the estimate a lower bound
        if _censored(g, idx, window, margin):
            return True, False
        if union_diameter(seed, g.centers[idx], g.radii[idx]) > k / 2:
            return True, False
    return True, True


def estimate_E_event(lam: float, law: RadiusLaw, k_max: int = 20, n_reps: int = 2000, rng=None,
                     workers: Optional[int] = None, tail_reps: Optional[int] = None) -> dict:
    """Lower bound on ``P[E]`` by truncation at ``k_max`` plus a union-bound tail.

    ``P[E] >= P[E_trunc] - sum_{k > k_max} P[D(W_0) > k/2]``; the tail uses
    stationarity along the axis and is estimated from diameter samples of
    ``W_0`` in a window of radius ``k_max``, where any censored sample makes
    the tail infinite.
    """
    stream = as_stream(rng)
    M = max(k_max / 2.0 + 2.0 * _censor_margin(law), 4.0)
    rows = run_replicates(_E_rep, stream.child("trunc"), n_reps, (lam, law, k_max, M), workers)
    empty = BernoulliEstimate.from_counts(int(rows[:, 0].sum()), n_reps)
    trunc = BernoulliEstimate.from_counts(int(rows[:, 1].sum()), n_reps, stream.record())
    tail_reps = n_reps if tail_reps is None else tail_reps
    D, cens = diameter_samples(lam, law, float(max(k_max, 4)), tail_reps, stream.child("tail"), workers)
    if cens.any():
        tail_mean = tail_hi = math.inf
    else:
        # number of k > k_max with D > k/2, i.e. k < 2D
        excess = np.maximum(np.ceil(2.0 * D) - 1.0 - k_max, 0.0)
        t = MeanEstimate.from_samples(excess.tolist())
        tail_mean, tail_hi = t.mean, max(t.ci_hi, t.mean)
    bound_point = trunc.point - tail_mean
    bound = trunc.ci_lo - tail_hi
    return jsonable({
        "params": {"lambda": lam, "law": law.to_dict(), "k_max": k_max, "n_reps": n_reps,
                   "tail_reps": tail_reps, "seed": stream.record()},
        "truncated": trunc.to_dict(), "empty_I0_I1": empty.to_dict(),
        "empty_exact": segment_void_probability(lam, law, 2.0),
        "tail": tail_mean, "tail_hi": tail_hi, "tail_censored": int(cens.sum()),
        "lower_bound_point": bound_point, "lower_bound": bound,
        "verdict": "POSITIVE" if bound > 0 else "UNINFORMATIVE",
    })


# ---------------------------------------------------------------- scaling

def grain_scaling(grains: GrainSet, factor: float) -> GrainSet:
    """Multiply every radius by ``factor``; centres (and zero-radius grains) are kept."""
    if not factor > 0:
        raise ValueError("scaling factor must be positive")
    return GrainSet(grains.centers.copy(), grains.radii * factor, grains.source_region, grains.intensity,
                    grains.seed, grains.ambient_dim)
