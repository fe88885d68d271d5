"""Poisson grain sampling for the spherical Boolean model.

``sample_boolean`` realises the restricted model: every grain centred in a
region.  ``sample_reaching_grains`` realises only the grains centred in a
source region that touch a target rectangle.  A grain at ``y`` with radius
``rho`` touches the target iff ``rho >= dist(y, target)``, so these grains
form a Poisson process of intensity ``lam * P[rho >= dist(y, target)]``,
sampled here shell by shell around the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .laws import RadiusLaw
from .regions import Rect, Region, sample_rounded_shell, shell_area
from .rng import RngStream, as_generator


@dataclass(frozen=True)
class Grain:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("grain radius must be >= 0")


@dataclass
class GrainSet:
    """A finite realisation of grains, stored column-wise."""

    centers: np.ndarray
    radii: np.ndarray
    source_region: Optional[Region] = None
    intensity: float = 0.0
    seed: Optional[dict] = None
    ambient_dim: int = field(default=0)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        if self.centers.ndim == 1:
            self.centers = self.centers.reshape(-1, self.ambient_dim or 2)
        if not self.ambient_dim:
            self.ambient_dim = self.centers.shape[1]
        if self.centers.shape != (len(self.radii), self.ambient_dim):
            raise ValueError("centers and radii disagree in shape")
        if np.any(self.radii < 0):
            raise ValueError("grain radii must be >= 0")

    @classmethod
    def empty(cls, dim: int = 2, **kw) -> "GrainSet":
        return cls(np.empty((0, dim)), np.empty(0), ambient_dim=dim, **kw)

    @classmethod
    def from_grains(cls, grains, dim: int = 2, **kw) -> "GrainSet":
        grains = list(grains)
        if not grains:
            return cls.empty(dim, **kw)
        return cls(np.array([g.center for g in grains], dtype=float),
                   np.array([g.radius for g in grains], dtype=float), **kw)

    def __len__(self):
        return len(self.radii)

    def __iter__(self) -> Iterator[Grain]:
        for c, r in zip(self.centers, self.radii):
            yield Grain(tuple(c), float(r))

    def __getitem__(self, i) -> Grain:
        return Grain(tuple(self.centers[i]), float(self.radii[i]))

    @property
    def grains(self) -> list[Grain]:
        return list(self)

    def subset(self, mask) -> "GrainSet":
        return GrainSet(self.centers[mask], self.radii[mask], self.source_region,
                        self.intensity, self.seed, self.ambient_dim)

    def union(self, other: "GrainSet") -> "GrainSet":
        return GrainSet(np.vstack([self.centers, other.centers]),
                        np.concatenate([self.radii, other.radii]),
                        None, self.intensity + other.intensity, None, self.ambient_dim)

    def to_dict(self) -> dict:
        return {"centers": self.centers.tolist(), "radii": self.radii.tolist(),
                "ambient_dim": self.ambient_dim, "intensity": self.intensity,
                "source_region": self.source_region.to_dict() if self.source_region else None,
                "seed": self.seed}


def _seed_record(rng):
    return rng.record() if isinstance(rng, RngStream) else None


def sample_poisson_points(region: Region, lam: float, rng) -> np.ndarray:
    """Homogeneous Poisson points of intensity ``lam`` in ``region``."""
    if lam <= 0:
        raise ValueError("intensity must be positive")
    return region.sample_poisson(as_generator(rng), lam)


def sample_boolean(region: Region, lam: float, law: RadiusLaw, rng) -> GrainSet:
    """All grains of the Boolean model centred in ``region``."""
    gen = as_generator(rng)
    pts = sample_poisson_points(region, lam, gen)
    radii = law.sample(gen, len(pts))
    return GrainSet(pts, radii, region, lam, _seed_record(rng), region.dim)


def _shell_edges(source: Region, target: Rect, law: RadiusLaw) -> list[float]:
    t_lo = source.min_dist_to(target)
    t_hi = min(source.max_dist_to(target), law.sup)
    if t_hi < t_lo:
        return []
    edges = {t_lo, t_hi}
    edges.update(b for b in law.breakpoints() if t_lo < b < t_hi)
    base = max(0.5 * law.typical(), 1e-9 * max(1.0, t_hi))
    t = base
    while t < t_hi:
        if t > t_lo:
            edges.add(t)
        t *= 2.0
    return sorted(edges)


def sample_reaching_grains(source: Region, target: Rect, lam: float, law: RadiusLaw, rng) -> GrainSet:
    """Grains centred in ``source`` that intersect the closed rectangle ``target``.

    Equal in law to sampling every grain of ``source`` and discarding those
    missing ``target``.  Points are drawn in shells ``t_j < dist <= t_{j+1}``
    at the dominating intensity ``lam * P[rho >= t_j]``, thinned to the exact
    intensity, and given radii from the law conditioned on ``rho >= dist``.
    """
    if lam <= 0:
        raise ValueError("intensity must be positive")
    if target.dim != 2:
        raise ValueError("reaching grains are planar only")
    gen = as_generator(rng)
    chunks_c, chunks_r = [], []

    # grains centred inside the target always reach it
    if source.min_dist_to(target) == 0.0 and target.measure() > 0:
        n = gen.poisson(lam * target.measure())
        pts = target.sample_uniform(gen, n)
        pts = pts[source.contains(pts)]
        chunks_c.append(pts)
        chunks_r.append(law.sample(gen, len(pts)))

    edges = _shell_edges(source, target, law)
    for t0, t1 in zip(edges[:-1], edges[1:]):
        if t1 <= t0:
            continue
        dom = float(law.tail_ge(t0)) if t0 > 0 else 1.0
        if dom <= 0:
            break
        n = gen.poisson(lam * dom * shell_area(target, t0, t1))
        if n == 0:
            continue
        pts = sample_rounded_shell(target, t0, t1, gen, n)
        d = target.dist(pts)
        keep = source.contains(pts) & (d > t0) & (d <= t1)
        accept = np.asarray(law.tail_ge(d[keep])) / dom
        sel = np.flatnonzero(keep)[gen.random(keep.sum()) < accept]
        if len(sel):
            chunks_c.append(pts[sel])
            chunks_r.append(law.sample_at_least(gen, d[sel]))

    if chunks_c:
        centers = np.vstack(chunks_c)
        radii = np.concatenate(chunks_r)
    else:
        centers, radii = np.empty((0, 2)), np.empty(0)
    return GrainSet(centers, radii, source, lam, _seed_record(rng), 2)


def law_moment(law: RadiusLaw, k: float) -> float:
    if k < 0:
        raise ValueError("moment order must be >= 0")
    return law.moment(k)


def law_tail(law: RadiusLaw, t: float) -> float:
    if t < 0:
        raise ValueError("tail argument must be >= 0")
    return float(law.tail(t))
