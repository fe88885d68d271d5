"""Strip-crossing and reach events across the 10^n scale ladder, and the certificates built from them.

Conventions.  ``S(alpha)`` is the 10:1 strip of :func:`geometry.make_strip`.

* ``F(alpha)``: ``S(alpha)`` is crossed the short way by grains centred in
  ``S(alpha)_alpha``.  Only grains meeting ``S(alpha)`` can matter, so the
  Monte Carlo samples exactly those (``sample_reaching_grains``).
* ``G(alpha)``: some grain centred in ``B(kappa*alpha) \\ S(alpha)_alpha`` meets
  ``S(alpha)``.  A Poisson existence probability, evaluated exactly.
* ``H_n``: ``S_n`` is crossed the short way by grains centred in ``S_{n+2}``.
* ``J_n``: some grain centred in ``S_{n+4} \\ S_{n+2}`` meets ``S_n``.

Probabilities entering an upper bound always use the upper Wilson limit.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .geometry import make_strip, strip_sequence
from .laws import Exponential, Fixed, Pareto, RadiusLaw, Uniform, ZeroAtom
from .mc import run_replicates
from .model import sample_reaching_grains
from .percolation import crossing_axis, occupied_crosses
from .reach import reach_mean
from .regions import Difference, Disc, Neighborhood, Rect
from .rng import RngStream, as_stream
from .stats import BernoulliEstimate, jsonable, verdict

C1 = 37 ** 2
C2 = 9


@dataclass(frozen=True)
class ScaleLadder:
    b: float
    n_max: int
    lam: float
    law: RadiusLaw
    kappa: float = 1e3

    def __post_init__(self):
        if not self.b > 0 or not self.lam > 0:
            raise ValueError("b and lambda must be positive")
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.kappa < 10:
            raise ValueError("reach factor must be >= 10")

    def scale(self, n: int) -> float:
        return float(Fraction(10) ** n * Fraction(self.b))

    @property
    def scales(self) -> list[float]:
        return [self.scale(n) for n in range(1, self.n_max + 1)]

    def to_dict(self):
        return {"b": self.b, "n_max": self.n_max, "lambda": self.lam, "law": self.law.to_dict(),
                "kappa": self.kappa}


# ---------------------------------------------------------------- F and G

def _strip_crossed(grains, strip: Rect) -> bool:
    c = grains.centers
    return occupied_crosses(np.ascontiguousarray(c[:, 0]), np.ascontiguousarray(c[:, 1]),
                            grains.radii, strip, crossing_axis(strip, "short"))


def _F_rep(stream: RngStream, alpha, lam, law, orientation):
    strip = make_strip(alpha, orientation)
    g = sample_reaching_grains(Neighborhood(strip, alpha), strip, lam, law, stream.generator())
    return _strip_crossed(g, strip)


def estimate_F(alpha: float, lam: float, law: RadiusLaw, n_reps: int, rng=None,
               orientation: str = "horizontal", workers: Optional[int] = None) -> BernoulliEstimate:
    """Monte Carlo estimate of ``P[F(alpha)]``."""
    if not alpha > 0 or not lam > 0:
        raise ValueError("alpha and lambda must be positive")
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    stream = as_stream(rng)
    hits = run_replicates(_F_rep, stream, n_reps, (alpha, lam, law, orientation), workers)
    return BernoulliEstimate.from_counts(int(hits.sum()), n_reps, stream.record())


def G_source(alpha: float, kappa: float, orientation: str = "horizontal"):
    strip = make_strip(alpha, orientation)
    return Difference(Disc((0.0, 0.0), kappa * alpha), Neighborhood(strip, alpha)), strip


def G_mean(alpha: float, lam: float, law: RadiusLaw, kappa: float = 1e3, rtol: float = 1e-8) -> float:
    """Expected number of far grains reaching ``S(alpha)``."""
    if kappa < 10:
        raise ValueError("reach factor must be >= 10")
    src, strip = G_source(alpha, kappa)
    return reach_mean(src, strip, law, lam, rtol)


def exact_G(alpha: float, lam: float, law: RadiusLaw, kappa: float = 1e3, rtol: float = 1e-8) -> float:
    """``P[G(alpha)] = 1 - exp(-Lambda)`` with ``Lambda`` from exact co-area quadrature."""
    return -math.expm1(-G_mean(alpha, lam, law, kappa, rtol))


def _G_rep(stream: RngStream, alpha, lam, law, kappa):
    src, strip = G_source(alpha, kappa)
    return len(sample_reaching_grains(src, strip, lam, law, stream.generator())) > 0


def mc_G(alpha: float, lam: float, law: RadiusLaw, kappa: float, n_reps: int, rng=None,
         workers: Optional[int] = None) -> BernoulliEstimate:
    """Monte Carlo cross-check of :func:`exact_G`."""
    stream = as_stream(rng)
    hits = run_replicates(_G_rep, stream, n_reps, (alpha, lam, law, kappa), workers)
    return BernoulliEstimate.from_counts(int(hits.sum()), n_reps, stream.record())


def markov_bound_G(alpha: float, lam: float, law: RadiusLaw, kappa: float = 1e3) -> float:
    """Expected number of grains in ``B(kappa*alpha)`` with radius above ``alpha``."""
    return lam * math.pi * (kappa * alpha) ** 2 * float(law.tail(alpha))


def markov_tail_sum(b: float, n_from: int, lam: float, law: RadiusLaw, kappa: float) -> float:
    """``sum_{n >= n_from} markov_bound_G(10**n * b)``, in closed form where the law allows."""
    if not math.isfinite(law.moment(2)):
        return math.inf
    base = lam * math.pi * kappa ** 2
    inner, weight = law, 1.0
    if isinstance(law, ZeroAtom):
        inner, weight = law.inner, 1.0 - law.p0
    total = 0.0
    n = n_from
    if isinstance(inner, (Fixed, Uniform)):
        while (a := 10.0 ** n * b) < inner.sup:
            total += base * a * a * weight * float(inner.tail(a))
            n += 1
        return total
    if isinstance(inner, Pareto):
        # below x_min the tail is 1; above, the terms form a geometric series
        while (a := 10.0 ** n * b) < inner.x_min:
            total += base * a * a * weight
            n += 1
        first = base * a * a * weight * float(inner.tail(a))
        return total + first / (1.0 - 10.0 ** (2.0 - inner.tau))
    # super-geometric decay (exponential tails): sum until terms vanish
    for _ in range(400):
        a = 10.0 ** n * b
        term = base * a * a * weight * float(inner.tail(a))
        total += term
        if term == 0.0 or (term < 1e-17 * total and a > 10 * inner.typical()):
            return total
        n += 1
    return total


# ---------------------------------------------------------------- reports

@dataclass
class CertificateReport:
    kind: str
    params: dict
    terms: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    overall: str = ""
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable({"kind": self.kind, "params": self.params, "terms": self.terms,
                         "verdicts": self.verdicts, "overall": self.overall, "summary": self.summary})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        rows = [jsonable(t) for t in self.terms]
        keys = sorted({k for r in rows for k in r if not isinstance(r[k], (dict, list))})
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items() if k in keys})
        return buf.getvalue()


def check_recursion(alpha: float, lam: float, law: RadiusLaw, kappa: float, n_reps: int, rng=None,
                    workers: Optional[int] = None) -> dict:
    """Test ``P[F(10 alpha)] <= C1 (P[F(alpha)]^2 + P[G(alpha)])``."""
    stream = as_stream(rng)
    f_small = estimate_F(alpha, lam, law, n_reps, stream.child("F", 0), workers=workers)
    f_big = estimate_F(10 * alpha, lam, law, n_reps, stream.child("F", 1), workers=workers)
    g = exact_G(alpha, lam, law, kappa)
    rhs_point = C1 * (f_small.point ** 2 + g)
    rhs_hi = C1 * (f_small.ci_hi ** 2 + g)
    v = verdict(f_big.point, f_big.ci_lo, rhs_point, rhs_hi)
    return {"alpha": alpha, "lambda": lam, "kappa": kappa, "law": law.to_dict(),
            "F_alpha": f_small.to_dict(), "F_10alpha": f_big.to_dict(), "G_alpha": g,
            "lhs": f_big.point, "lhs_lo": f_big.ci_lo, "rhs": rhs_point, "rhs_hi": rhs_hi,
            "slack": rhs_hi - f_big.ci_lo, "verdict": v}


@dataclass
class BoundChain:
    applicable: bool
    reason: str
    f_bounds: list
    sum_f: object
    sum_g: object
    total: object
    coarse_total: object

    def to_dict(self):
        return jsonable(self.__dict__)


def bound_chain(f0, g_seq, c2=C2, g_tail=0) -> BoundChain:
    """Propagate ``f_n <= f_{n-1}/c2 + g_n`` from ``f_0``.

    ``g_seq[k-1]`` is ``g_k``; ``g_tail`` bounds ``sum_{k > len(g_seq)} g_k``.
    Exact when the inputs are :class:`fractions.Fraction`.  ``total`` bounds
    ``sum_{k>=1} (f_k + g_k)`` by the geometric sums; ``coarse_total`` is the
    coarser ``2 c2^-2 + 3 sum g`` (valid when ``f_0 <= 1/c2``).
    """
    g = list(g_seq)
    if any(x < 0 for x in g) or g_tail < 0:
        raise ValueError("g terms must be >= 0")
    one = Fraction(1) if isinstance(f0, Fraction) else 1.0
    inv = one / c2
    sum_g = sum(g, 0 * one) + g_tail
    if f0 > inv:
        return BoundChain(False, f"f0 = {float(f0):.6g} exceeds 1/C2", [], None, sum_g, None, None)
    if sum_g > inv * inv:
        return BoundChain(False, f"sum g = {float(sum_g):.6g} exceeds C2^-2", [], None, sum_g, None, None)
    f_bounds = []
    f = f0
    for gk in g:
        f = f * inv + gk
        f_bounds.append(f)
    # sum_{k>=1} f_k <= sum_k f0 c2^-k + sum_m g_m sum_{j>=0} c2^-j
    geo = one * c2 / (c2 - 1)
    sum_f = f0 / (c2 - 1) + sum_g * geo
    total = sum_f + sum_g
    coarse_total = 2 * inv * inv + 3 * sum_g
    return BoundChain(True, "", f_bounds, sum_f, sum_g, total, coarse_total)


def summability_certificate(ladder: ScaleLadder, n_empirical: int = 2, n_reps: int = 10_000, rng=None,
                            workers: Optional[int] = None) -> CertificateReport:
    """Bound ``sum_{n>=1} (P[F(10^n b)] + P[G(10^n b)])`` and compare with 1/2.

    Scales ``n <= n_empirical`` use the Monte Carlo F (upper limit) and exact
    G.  Beyond, the chain starts from ``f_0 = C1 * F_hi(10^{n_empirical} b)``
    with ``g_k = C1^2 P[G(10^{n_empirical+k-1} b)]``, exact up to ``n_max`` and
    Markov-bounded after.
    """
    if n_empirical < 0:
        raise ValueError("n_empirical must be >= 0")
    stream = as_stream(rng)
    b, lam, law, kappa = ladder.b, ladder.lam, ladder.law, ladder.kappa
    n_top = max(ladder.n_max, n_empirical)
    G = {n: exact_G(ladder.scale(n), lam, law, kappa) for n in range(n_empirical, n_top + 1)}
    terms = []
    head = 0.0
    F_top = None
    for n in range(0 if n_empirical == 0 else 1, n_empirical + 1):
        est = estimate_F(ladder.scale(n), lam, law, n_reps, stream.child("F", n), workers=workers)
        if n == n_empirical:
            F_top = est
        if n >= 1:
            g_n = G[n] if n in G else exact_G(ladder.scale(n), lam, law, kappa)
            head += est.ci_hi + g_n
            terms.append({"n": n, "scale": ladder.scale(n), "source": "empirical", "F_hat": est.point,
                          "F_lo": est.ci_lo, "F_hi": est.ci_hi, "F_trials": est.trials, "G": g_n,
                          "contribution": est.ci_hi + g_n})
    f0 = C1 * F_top.ci_hi
    g_seq = [C1 ** 2 * G[n] for n in range(n_empirical, n_top + 1)]
    g_tail = C1 ** 2 * markov_tail_sum(b, n_top + 1, lam, law, kappa)
    chain = bound_chain(f0, g_seq, C2, g_tail)
    G_tail_direct = sum(G[n] for n in range(n_empirical + 1, n_top + 1)) + \
        markov_tail_sum(b, n_top + 1, lam, law, kappa)
    if chain.applicable:
        for k, fk in enumerate(chain.f_bounds, start=1):
            n = n_empirical + k
            g_n = G.get(n)
            terms.append({"n": n, "scale": ladder.scale(n), "source": "chain", "f_bound": fk,
                          "F_bound": fk / C1, "G": g_n if g_n is not None else math.nan})
        tail = chain.sum_f / C1 + G_tail_direct
    else:
        tail = math.inf
    total = head + tail
    if head > 0.5:
        overall = "FAIL"
    elif not chain.applicable:
        overall = "NOT_APPLICABLE"
    else:
        overall = "PASS" if total <= 0.5 else "FAIL"
    return CertificateReport(
        "summability",
        {**ladder.to_dict(), "n_empirical": n_empirical, "n_reps": n_reps, "C1": C1, "C2": C2,
         "seed": stream.record()},
        terms,
        {"chain_applicable": chain.applicable, "chain_reason": chain.reason, "total_le_half": total <= 0.5},
        overall,
        {"head": head, "tail": tail, "total": total, "f0": f0, "g_tail_markov": g_tail,
         "G_tail": G_tail_direct, "chain": chain.to_dict()},
    )


# ---------------------------------------------------------------- H_n, J_n and vacancy

def _orientation(n: int) -> str:
    return "horizontal" if n % 2 == 1 else "vertical"


def _strip_n(ladder: ScaleLadder, n: int) -> Rect:
    return make_strip(ladder.scale(n), _orientation(n))


def _H_rep(stream: RngStream, n, b, lam, law):
    ladder_s = lambda k: float(Fraction(10) ** k * Fraction(b))
    s_n = make_strip(ladder_s(n), _orientation(n))
    s_outer = make_strip(ladder_s(n + 2), _orientation(n + 2))
    g = sample_reaching_grains(s_outer, s_n, lam, law, stream.generator())
    return _strip_crossed(g, s_n)


def exact_J(n: int, ladder: ScaleLadder, rtol: float = 1e-8) -> float:
    s_n = _strip_n(ladder, n)
    src = Difference(_strip_n(ladder, n + 4), _strip_n(ladder, n + 2))
    return -math.expm1(-reach_mean(src, s_n, ladder.law, ladder.lam, rtol))


def estimate_H(n: int, ladder: ScaleLadder, n_reps: int, rng=None, workers: Optional[int] = None):
    stream = as_stream(rng)
    hits = run_replicates(_H_rep, stream, n_reps, (n, ladder.b, ladder.lam, ladder.law), workers)
    return BernoulliEstimate.from_counts(int(hits.sum()), n_reps, stream.record())


def estimate_H_J(n: int, ladder: ScaleLadder, n_reps: int, rng=None, workers: Optional[int] = None) -> dict:
    """``H_n`` by Monte Carlo, ``J_n`` exactly, and the comparison with ``F + G`` at scale ``10^n b``.

    ``H_n`` and ``J_n`` depend on Poisson points in disjoint regions, hence
    ``P[H ∪ J] = P[H] + P[J] - P[H] P[J]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    stream = as_stream(rng)
    H = estimate_H(n, ladder, n_reps, stream.child("H", n), workers)
    J = exact_J(n, ladder)
    union = lambda h: h + J - h * J
    F = estimate_F(ladder.scale(n), ladder.lam, ladder.law, n_reps, stream.child("F", n),
                   orientation=_orientation(n), workers=workers)
    G = exact_G(ladder.scale(n), ladder.lam, ladder.law, ladder.kappa)
    v = verdict(union(H.point), union(H.ci_lo), F.point + G, F.ci_hi + G)
    return {"n": n, "scale": ladder.scale(n), "orientation": _orientation(n), "H": H.to_dict(), "J": J,
            "union": union(H.point), "union_lo": union(H.ci_lo), "union_hi": union(H.ci_hi),
            "F": F.to_dict(), "G": G, "rhs": F.point + G, "rhs_hi": F.ci_hi + G, "verdict": v}


def vacancy_certificate(ladder: ScaleLadder, n_reps: int = 10_000, rng=None, n_trunc: Optional[int] = None,
                        head_reps: Optional[int] = None, workers: Optional[int] = None) -> CertificateReport:
    """Lower bound ``1 - sum_{n<=n_trunc} (P[H_n] + P[J_n]) - tail`` on the no-blocking probability.

    The tail bounds ``sum_{n>n_trunc} P[H_n ∪ J_n]`` through
    ``P[H_n ∪ J_n] <= P[F(10^n b)] + P[G(10^n b)]`` and the summability chain
    started at ``n_trunc`` (run with ``head_reps`` replicates).
    """
    stream = as_stream(rng)
    n_trunc = min(ladder.n_max, 1) if n_trunc is None else n_trunc
    head_reps = n_reps if head_reps is None else head_reps
    terms = []
    head_hi, head_pt = 0.0, 0.0
    for n in range(1, n_trunc + 1):
        H = estimate_H(n, ladder, n_reps, stream.child("H", n), workers)
        J = exact_J(n, ladder)
        head_hi += H.ci_hi + J
        head_pt += H.point + J
        terms.append({"n": n, "scale": ladder.scale(n), "orientation": _orientation(n), "H_hat": H.point,
                      "H_lo": H.ci_lo, "H_hi": H.ci_hi, "H_trials": H.trials, "J": J})
    summ = summability_certificate(ladder, n_trunc, head_reps, stream.child("summability"), workers)
    # the summability head covers n <= n_trunc, which H/J already account for
    tail = summ.summary["tail"]
    bound = 1.0 - head_hi - tail
    bound_pt = 1.0 - head_pt - tail
    if bound >= 0.5:
        overall = "PASS"
    elif bound <= 0:
        overall = "UNINFORMATIVE"
    else:
        overall = "WEAK"
    return CertificateReport(
        "vacancy",
        {**ladder.to_dict(), "n_trunc": n_trunc, "n_reps": n_reps, "head_reps": head_reps, "seed": stream.record()},
        terms,
        {"bound_ge_half": bound >= 0.5, "tail_certified": math.isfinite(tail)},
        overall,
        {"bound": bound, "bound_point": bound_pt, "head_hi": head_hi, "tail": tail,
         "summability": summ.to_dict()},
    )


__all__ = ["C1", "C2", "ScaleLadder", "CertificateReport", "BoundChain", "estimate_F", "exact_G", "G_mean",
           "mc_G", "markov_bound_G", "markov_tail_sum", "check_recursion", "bound_chain",
           "summability_certificate", "strip_sequence", "estimate_H", "exact_J", "estimate_H_J",
           "vacancy_certificate"]
