"""Planar sections of a three-dimensional Boolean model.

A ball ``B(y, rho)`` with ``y = (x, h)`` meets the plane ``{z = 0}`` iff
``|h| <= rho``, in a disc of radius ``sqrt(rho^2 - h^2)`` centred at ``x``.
Per unit planar area the hitting balls form a Poisson process of intensity
``lam * omega_{d-2} * E[rho^{d-2}]`` (for ``d = 3``: ``2 lam E[rho]``) and,
given a hit, ``rho`` is size-biased by ``rho^{d-2}`` and ``h`` is uniform on
``[-rho, rho]``.  Sampling that process directly avoids the 3D slab.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from . import _kernels as K
from .laws import RadiusLaw
from .mc import run_replicates
from .model import GrainSet, sample_boolean
from .regions import Neighborhood, Rect, unit_ball_volume
from .rng import RngStream, as_generator, as_stream
from .stats import BernoulliEstimate, jsonable


@dataclass(frozen=True)
class SliceLaw:
    ambient_dim: int
    parent: RadiusLaw

    def __post_init__(self):
        if self.ambient_dim < 3:
            raise ValueError("slices need ambient dimension >= 3")

    @property
    def intensity_factor(self) -> float:
        m = self.parent.moment(self.ambient_dim - 2)
        return math.inf if not math.isfinite(m) else unit_ball_volume(self.ambient_dim - 2) * m

    def sample(self, rng, n: int):
        """Radii ``sigma`` of ``n`` slice discs, with the parent radii and heights."""
        if self.ambient_dim != 3:
            raise NotImplementedError("slice sampling is implemented for d = 3")
        if not math.isfinite(self.intensity_factor):
            raise ValueError("E[rho^(d-2)] is infinite: the slice has infinite intensity")
        rho = self.parent.sample_size_biased(rng, n, 1.0)
        h = rho * (2.0 * rng.random(n) - 1.0)
        sigma = np.sqrt(np.maximum(rho * rho - h * h, 0.0))
        return sigma, rho, h


def induced_intensity(lam: float, d: int, law: RadiusLaw) -> float:
    """``lam * omega_{d-2} * E[rho^{d-2}]``; ``math.inf`` when the moment diverges."""
    if lam <= 0:
        raise ValueError("intensity must be positive")
    return lam * SliceLaw(d, law).intensity_factor


def _margin(law: RadiusLaw, margin: Optional[float]) -> float:
    if margin is not None:
        return margin
    return law.sup if math.isfinite(law.sup) else 0.0


def sample_slice(lam: float, d: int, law: RadiusLaw, window: Rect, rng, margin: Optional[float] = None,
                 return_heights: bool = False):
    """Planar grains cut by ``{z = 0}`` from the ``d``-dimensional model.

    Disc centres are drawn in ``window`` grown by ``margin`` (default: the
    radius bound of a bounded law), and discs missing ``window`` are dropped,
    so for bounded laws the output is exactly the slice restricted to discs
    meeting ``window``.  For unbounded laws the default margin is 0 and only
    discs centred in ``window`` are returned.
    """
    sl = SliceLaw(d, law)
    lam2 = induced_intensity(lam, d, law)
    if not math.isfinite(lam2):
        raise ValueError("E[rho^(d-2)] is infinite: the slice has infinite intensity")
    gen = as_generator(rng)
    m = _margin(law, margin)
    region = Neighborhood(window, m) if m > 0 else window
    pts = region.sample_poisson(gen, lam2)
    sigma, rho, h = sl.sample(gen, len(pts))
    if m > 0:
        (x0, y0), (x1, y1) = window.lo, window.hi
        keep = K.meets_rect_mask(np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
                                 sigma, x0, y0, x1, y1)
        pts, sigma, rho, h = pts[keep], sigma[keep], rho[keep], h[keep]
    seed = rng.record() if isinstance(rng, RngStream) else None
    g = GrainSet(pts, sigma, region, lam2, seed, 2)
    return (g, rho, h) if return_heights else g


def brute_force_slice(lam: float, law: RadiusLaw, window: Rect, rng) -> GrainSet:
    """Slice by sampling every 3D ball in a slab and cutting it (bounded laws only)."""
    if not math.isfinite(law.sup):
        raise ValueError("brute-force slicing needs a bounded radius law")
    gen = as_generator(rng)
    m = law.sup
    (x0, y0), (x1, y1) = window.lo, window.hi
    box = Rect((x0 - m, y0 - m, -m), (x1 + m, y1 + m, m))
    g3 = sample_boolean(box, lam, law, gen)
    z = g3.centers[:, 2]
    hit = np.abs(z) < g3.radii
    c = g3.centers[hit, :2]
    sigma = np.sqrt(g3.radii[hit] ** 2 - z[hit] ** 2)
    keep = K.meets_rect_mask(np.ascontiguousarray(c[:, 0]), np.ascontiguousarray(c[:, 1]), sigma, x0, y0, x1, y1)
    return GrainSet(c[keep], sigma[keep], window, lam, None, 2)


def _slice_stats(stream: RngStream, lam, law, window, mode):
    gen = stream.generator()
    g = sample_slice(lam, 3, law, window, gen) if mode == "direct" else brute_force_slice(lam, law, window, gen)
    inside = window.contains(g.centers) if len(g) else np.zeros(0, bool)
    s = g.radii[inside]
    cx, cy = window.center
    covered = bool(np.any((g.centers[:, 0] - cx) ** 2 + (g.centers[:, 1] - cy) ** 2 <= g.radii ** 2)) if len(g) else False
    return len(s), float(s.sum()), float((s * s).sum()), float((s ** 4).sum()), covered


@dataclass
class SliceStats:
    mode: str
    n_reps: int
    count: int
    area: float
    intensity: float
    intensity_se: float
    mean_sigma: float
    mean_sigma2: float
    mean_sigma2_se: float
    coverage: BernoulliEstimate

    def to_dict(self):
        return jsonable(self.__dict__)


def _collect(rows, n_reps, area, mode) -> SliceStats:
    a = np.array([r[:4] for r in rows], dtype=float)
    cov = int(sum(r[4] for r in rows))
    n = a[:, 0].sum()
    # counts per replicate are Poisson, so the count variance estimates the intensity variance
    inten = n / (n_reps * area)
    inten_se = math.sqrt(max(a[:, 0].var(ddof=1), 1e-300) / n_reps) / area if n_reps > 1 else math.nan
    m1 = a[:, 1].sum() / n if n else math.nan
    m2 = a[:, 2].sum() / n if n else math.nan
    m4 = a[:, 3].sum() / n if n else math.nan
    se2 = math.sqrt(max(m4 - m2 * m2, 0.0) / n) if n > 1 else math.nan
    return SliceStats(mode, n_reps, int(n), area, inten, inten_se, m1, m2, se2,
                      BernoulliEstimate.from_counts(cov, n_reps))


def slice_statistics(lam: float, law: RadiusLaw, window: Rect, n_reps: int, rng=None, mode: str = "direct",
                     workers: Optional[int] = None) -> SliceStats:
    if mode not in ("direct", "brute"):
        raise ValueError("mode must be 'direct' or 'brute'")
    if mode == "brute" and not math.isfinite(law.sup):
        raise ValueError("brute-force slicing needs a bounded radius law; use mode='direct'")
    stream = as_stream(rng)
    rows = run_replicates(_slice_stats, stream, n_reps, (lam, law, window, mode), workers)
    return _collect(list(rows), n_reps, window.measure(), mode)


def origin_coverage_3d(lam: float, law: RadiusLaw) -> float:
    """``P[o in xi] = 1 - exp(-lam * E[|B(o, rho)|])`` in three dimensions."""
    return -math.expm1(-lam * unit_ball_volume(3) * law.moment(3))


def slice_consistency(lam: float, d: int, law: RadiusLaw, window: Rect, n_reps: int, rng=None,
                      brute_force: bool = True, workers: Optional[int] = None) -> dict:
    """Compare direct slice sampling with the induced intensity, 3D coverage and (optionally) brute force.

    Agreement uses a Bonferroni-adjusted joint 95% level over all comparisons.
    """
    if d != 3:
        raise NotImplementedError("slice sampling is implemented for d = 3")
    if brute_force and not math.isfinite(law.sup):
        raise ValueError("brute-force slicing needs a bounded radius law; pass brute_force=False")
    stream = as_stream(rng)
    direct = slice_statistics(lam, law, window, n_reps, stream.child("direct"), "direct", workers)
    lam2 = induced_intensity(lam, d, law)
    cov_exact = origin_coverage_3d(lam, law)
    checks = {}
    n_cmp = 5 if brute_force else 2
    z = NormalDist().inv_cdf(1 - 0.05 / (2 * n_cmp))

    def close(a, b, se):
        return bool(abs(a - b) <= z * se)

    checks["intensity_vs_induced"] = close(direct.intensity, lam2, direct.intensity_se)
    cov = direct.coverage
    cov_se = math.sqrt(max(cov_exact * (1 - cov_exact), 1e-300) / n_reps)
    checks["coverage_vs_3d"] = close(cov.point, cov_exact, cov_se)
    brute = None
    if brute_force:
        brute = slice_statistics(lam, law, window, n_reps, stream.child("brute"), "brute", workers)
        checks["intensity_vs_brute"] = close(direct.intensity, brute.intensity,
                                             math.hypot(direct.intensity_se, brute.intensity_se))
        checks["sigma2_vs_brute"] = close(direct.mean_sigma2, brute.mean_sigma2,
                                          math.hypot(direct.mean_sigma2_se, brute.mean_sigma2_se))
        b_cov = brute.coverage.point
        checks["coverage_vs_brute"] = close(cov.point, b_cov, math.sqrt(2) * cov_se)
    return jsonable({
        "params": {"lambda": lam, "d": d, "law": law.to_dict(), "window": window.to_dict(), "n_reps": n_reps,
                   "seed": stream.record(), "z_joint": z},
        "induced_intensity": lam2, "ratio_hat": direct.intensity / lam, "coverage_exact": cov_exact,
        "direct": direct.to_dict(), "brute": brute.to_dict() if brute else None,
        "checks": checks, "agree": all(checks.values()),
    })
