"""Sampling regions: boxes, balls, rounded rectangles and set differences.

All regions are closed sets.  Besides measure, membership and uniform
sampling, every planar region exposes its boundary as a list of
*primitives* (infinite lines and full circles containing the boundary).
The level-set integrals in :mod:`boolperc.reach` use them to find where a
curve enters or leaves the region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


def unit_ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


class Region:
    dim: int

    def measure(self) -> float:
        raise NotImplementedError

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> "Rect":
        raise NotImplementedError

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_poisson(self, rng: np.random.Generator, lam: float) -> np.ndarray:
        m = self.measure()
        if not math.isfinite(m):
            raise ValueError("cannot sample a Poisson process on an infinite-measure region")
        n = rng.poisson(lam * m) if m > 0 else 0
        return self.sample_uniform(rng, n)

    def primitives(self) -> list[tuple]:
        raise NotImplementedError

    def min_dist_to(self, target: "Rect") -> float:
        return 0.0

    def max_dist_to(self, target: "Rect") -> float:
        box = self.bbox()
        return float(target.dist(box.corners()).max())

    def to_dict(self) -> dict:
        raise NotImplementedError


def same_box(a, b) -> bool:
    return isinstance(a, Rect) and isinstance(b, Rect) and a.lo == b.lo and a.hi == b.hi


def _as_points(pts, dim):
    a = np.asarray(pts, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, dim)
    return a


@dataclass(frozen=True)
class Rect(Region):
    """Closed axis-aligned box ``[lo, hi]``; degenerate (zero-width) sides allowed."""

    lo: tuple
    hi: tuple
    orientation: Optional[str] = None

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same dimension")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("rectangle corners must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"rectangle needs lo <= hi componentwise, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def centered(cls, center, widths, orientation=None):
        c = np.asarray(center, dtype=float)
        w = np.asarray(widths, dtype=float) / 2
        return cls(tuple(c - w), tuple(c + w), orientation)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2

    @property
    def short_side(self) -> float:
        return float(self.widths.min())

    @property
    def perimeter(self) -> float:
        w, h = self.widths
        return 2.0 * (w + h)

    def measure(self):
        return float(np.prod(self.widths))

    def contains(self, pts, tol: float = 0.0):
        p = _as_points(pts, self.dim)
        return np.all((p >= np.asarray(self.lo) - tol) & (p <= np.asarray(self.hi) + tol), axis=1)

    def dist(self, pts) -> np.ndarray:
        p = _as_points(pts, self.dim)
        d = np.maximum(np.maximum(np.asarray(self.lo) - p, 0.0), p - np.asarray(self.hi))
        return np.sqrt((d * d).sum(axis=1))

    def dist_to_rect(self, other: "Rect") -> float:
        gap = np.maximum(np.maximum(np.subtract(other.lo, self.hi), np.subtract(self.lo, other.hi)), 0.0)
        return float(np.sqrt((gap * gap).sum()))

    def intersection(self, other: "Rect") -> Optional["Rect"]:
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return None
        return Rect(tuple(lo), tuple(hi))

    def contains_rect(self, other: "Rect") -> bool:
        return bool(np.all(np.asarray(self.lo) <= other.lo) and np.all(np.asarray(self.hi) >= other.hi))

    def corners(self) -> np.ndarray:
        axes = [(a, b) for a, b in zip(self.lo, self.hi)]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def bbox(self):
        return Rect(self.lo, self.hi)

    def sample_uniform(self, rng, n):
        u = rng.random((n, self.dim))
        return np.asarray(self.lo) + u * self.widths

    def primitives(self):
        (x0, y0), (x1, y1) = self.lo, self.hi
        return [("line", (x0, y0), (1.0, 0.0)), ("line", (x0, y1), (1.0, 0.0)),
                ("line", (x0, y0), (0.0, 1.0)), ("line", (x1, y0), (0.0, 1.0))]

    def min_dist_to(self, target):
        return self.dist_to_rect(target)

    def to_dict(self):
        d = {"type": "rect", "lo": list(self.lo), "hi": list(self.hi)}
        if self.orientation:
            d["orientation"] = self.orientation
        return d


@dataclass(frozen=True)
class Disc(Region):
    """Closed Euclidean ball (a disc in the plane)."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not (0 <= self.radius < math.inf):
            raise ValueError("disc radius must be finite and >= 0")

    @property
    def dim(self):
        return len(self.center)

    def measure(self):
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def contains(self, pts, tol: float = 0.0):
        p = _as_points(pts, self.dim) - np.asarray(self.center)
        return (p * p).sum(axis=1) <= (self.radius + tol) ** 2

    def bbox(self):
        c = np.asarray(self.center)
        return Rect(tuple(c - self.radius), tuple(c + self.radius))

    def sample_uniform(self, rng, n):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / self.dim)
        return np.asarray(self.center) + g * r[:, None]

    def primitives(self):
        return [("circle", self.center, self.radius)]

    def min_dist_to(self, target):
        return max(0.0, float(target.dist(np.asarray(self.center))[0]) - self.radius)

    def max_dist_to(self, target):
        # distance to a convex set is convex, so its max over the disc is
        # bounded by the centre's distance plus the radius
        return float(target.dist(np.asarray(self.center))[0]) + self.radius

    def to_dict(self):
        return {"type": "disc", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Neighborhood(Region):
    """The closed ``r``-neighbourhood of a planar rectangle (a rounded rectangle)."""

    rect: Rect
    r: float

    def __post_init__(self):
        if not (0 <= self.r < math.inf):
            raise ValueError("neighbourhood radius must be finite and >= 0")
        if self.rect.dim != 2:
            raise ValueError("neighbourhoods are planar only")

    dim = 2

    def measure(self):
        return self.rect.measure() + self.rect.perimeter * self.r + math.pi * self.r ** 2

    def contains(self, pts, tol: float = 0.0):
        return self.rect.dist(pts) <= self.r + tol

    def bbox(self):
        return Rect(tuple(np.asarray(self.rect.lo) - self.r), tuple(np.asarray(self.rect.hi) + self.r))

    def sample_uniform(self, rng, n):
        return sample_rounded_shell(self.rect, 0.0, self.r, rng, n, include_core=True)

    def primitives(self):
        (x0, y0), (x1, y1) = self.rect.lo, self.rect.hi
        r = self.r
        return [("line", (x0, y0 - r), (1.0, 0.0)), ("line", (x0, y1 + r), (1.0, 0.0)),
                ("line", (x0 - r, y0), (0.0, 1.0)), ("line", (x1 + r, y0), (0.0, 1.0)),
                ("circle", (x0, y0), r), ("circle", (x1, y0), r),
                ("circle", (x0, y1), r), ("circle", (x1, y1), r)]

    def min_dist_to(self, target):
        return max(0.0, self.rect.dist_to_rect(target) - self.r)

    def max_dist_to(self, target):
        if same_box(target, self.rect):
            return self.r
        return super().max_dist_to(target)

    def to_dict(self):
        return {"type": "neighborhood", "rect": self.rect.to_dict(), "r": self.r}


@dataclass(frozen=True)
class Difference(Region):
    """``outer`` minus ``inner``; measure assumes ``inner`` is nested in ``outer``."""

    outer: Region
    inner: Region

    @property
    def dim(self):
        return self.outer.dim

    def measure(self):
        return self.outer.measure() - self.inner.measure()

    def contains(self, pts, tol: float = 0.0):
        return self.outer.contains(pts) & ~self.inner.contains(pts)

    def bbox(self):
        return self.outer.bbox()

    def sample_uniform(self, rng, n):
        # rejection from the outer region
        out = np.empty((0, self.dim))
        while len(out) < n:
            cand = self.outer.sample_uniform(rng, max(16, 2 * (n - len(out))))
            out = np.vstack([out, cand[self.contains(cand)]])
        return out[:n]

    def sample_poisson(self, rng, lam):
        pts = self.outer.sample_poisson(rng, lam)
        return pts[~self.inner.contains(pts)]

    def primitives(self):
        return self.outer.primitives() + self.inner.primitives()

    def min_dist_to(self, target):
        lo = self.outer.min_dist_to(target)
        if isinstance(self.inner, Neighborhood) and same_box(self.inner.rect, target):
            lo = max(lo, self.inner.r)
        elif isinstance(self.inner, Rect) and self.inner.contains_rect(target):
            gap = min(np.min(np.subtract(target.lo, self.inner.lo)), np.min(np.subtract(self.inner.hi, target.hi)))
            lo = max(lo, float(gap))
        return lo

    def max_dist_to(self, target):
        return self.outer.max_dist_to(target)

    def to_dict(self):
        return {"type": "difference", "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}


def region_from_dict(d: dict) -> Region:
    kind = d["type"]
    if kind == "rect":
        return Rect(tuple(d["lo"]), tuple(d["hi"]), d.get("orientation"))
    if kind == "disc":
        return Disc(tuple(d["center"]), float(d["radius"]))
    if kind == "neighborhood":
        return Neighborhood(region_from_dict(d["rect"]), float(d["r"]))
    if kind == "difference":
        return Difference(region_from_dict(d["outer"]), region_from_dict(d["inner"]))
    raise ValueError(f"unknown region type {kind!r}")


def shell_area(rect: Rect, t0: float, t1: float) -> float:
    return rect.perimeter * (t1 - t0) + math.pi * (t1 * t1 - t0 * t0)


def sample_rounded_shell(rect: Rect, t0: float, t1: float, rng, n: int,
                         include_core: bool = False) -> np.ndarray:
    """Uniform points on ``{x : t0 < dist(x, rect) <= t1}`` (plus ``rect`` itself if asked).

    The shell splits into four edge strips and four quarter annuli around the
    corners; pieces are chosen in proportion to area.
    """
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    w, h = x1 - x0, y1 - y0
    dt = t1 - t0
    quarter = 0.25 * math.pi * (t1 * t1 - t0 * t0)
    areas = np.array([w * h if include_core else 0.0, w * dt, w * dt, h * dt, h * dt,
                      quarter, quarter, quarter, quarter])
    total = areas.sum()
    if n == 0 or total <= 0:
        return np.empty((0, 2))
    piece = rng.choice(9, size=n, p=areas / total)
    u = rng.random((n, 2))
    out = np.empty((n, 2))
    off = t0 + u[:, 1] * dt
    along_x = x0 + u[:, 0] * w
    along_y = y0 + u[:, 0] * h
    rad = np.sqrt(t0 * t0 + u[:, 1] * (t1 * t1 - t0 * t0))
    ang = u[:, 0] * (math.pi / 2)
    corners = {5: (x1, y1, 0.0), 6: (x0, y1, 0.5), 7: (x0, y0, 1.0), 8: (x1, y0, 1.5)}
    for k in range(9):
        m = piece == k
        if not m.any():
            continue
        if k == 0:
            out[m] = np.column_stack([along_x[m], y0 + u[m, 1] * h])
        elif k == 1:
            out[m] = np.column_stack([along_x[m], y0 - off[m]])
        elif k == 2:
            out[m] = np.column_stack([along_x[m], y1 + off[m]])
        elif k == 3:
            out[m] = np.column_stack([x0 - off[m], along_y[m]])
        elif k == 4:
            out[m] = np.column_stack([x1 + off[m], along_y[m]])
        else:
            cx, cy, quad = corners[k]
            a = ang[m] + quad * math.pi
            out[m] = np.column_stack([cx + rad[m] * np.cos(a), cy + rad[m] * np.sin(a)])
    return out
