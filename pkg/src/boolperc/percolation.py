"""Crossings, clusters and diameters for planar grain configurations.

Inside a rectangle each clipped grain ``B ∩ rect`` is convex, so the
occupied set restricted to the rectangle is connected exactly along chains
of clipped grains that pairwise intersect.  Crossings reduce to union-find
with two virtual nodes for the target edges.  Vacant crossings are decided
by planar duality.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .model import GrainSet
from .regions import Rect
from .stats import BernoulliEstimate, wilson_interval
from .rng import as_generator

DIRECTIONS = ("short", "long", "x", "y")


def crossing_axis(rect: Rect, direction: str) -> int:
    """Axis the crossing path travels along: 0 joins left/right, 1 joins bottom/top."""
    if direction in ("x", "left-right"):
        return 0
    if direction in ("y", "bottom-top", "top-bottom"):
        return 1
    w, h = rect.widths
    if w == h:
        raise ValueError("short/long crossing of a square is ambiguous; use 'x' or 'y'")
    if direction in ("short", "short-way"):
        return 0 if w < h else 1
    if direction in ("long", "long-way"):
        return 0 if w > h else 1
    raise ValueError(f"unknown crossing direction {direction!r}")


def _cell_size(radii: np.ndarray, rect: Rect) -> float:
    pos = radii[radii > 0]
    typical = 2.0 * float(pos.mean()) if len(pos) else 1.0
    return max(typical, rect.short_side / 64.0, 1e-9)


@dataclass
class CrossingQuery:
    rect: Rect
    direction: str
    phase: str
    allowed_grains: GrainSet
    complete: bool = True  # allowed_grains holds every grain meeting rect

    def __post_init__(self):
        if self.phase not in ("occupied", "vacant"):
            raise ValueError("phase must be 'occupied' or 'vacant'")
        if self.allowed_grains.ambient_dim != 2:
            raise ValueError("crossings are planar only")
        if self.rect.measure() <= 0:
            raise ValueError("crossing rectangle must have positive area")


@dataclass
class CrossingResult:
    crossed: bool
    witness: Optional[list] = None
    complete: bool = True

    def __bool__(self):
        return self.crossed


def _arrays(grains: GrainSet):
    c = grains.centers
    return (np.ascontiguousarray(c[:, 0]), np.ascontiguousarray(c[:, 1]),
            np.ascontiguousarray(grains.radii))


def occupied_crosses(cx, cy, r, rect: Rect, axis: int) -> bool:
    """Fast path on raw arrays, used by the Monte Carlo loops."""
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    cell = _cell_size(r, rect) if len(r) else 1.0
    return bool(K.crosses(cx, cy, r, x0, y0, x1, y1, axis, cell))


def occupied_crossing(query: CrossingQuery, witness: bool = False) -> CrossingResult:
    """Whether the occupied set crosses ``query.rect`` in the requested direction.

    With ``witness=True`` also returns a chain of grain indices (into
    ``allowed_grains``) whose clipped pieces link the two target edges.
    """
    if query.phase != "occupied":
        raise ValueError("occupied_crossing needs phase='occupied'")
    rect = query.rect
    axis = crossing_axis(rect, query.direction)
    cx, cy, r = _arrays(query.allowed_grains)
    if not witness:
        return CrossingResult(occupied_crosses(cx, cy, r, rect, axis))
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    idx = np.flatnonzero(K.meets_rect_mask(cx, cy, r, x0, y0, x1, y1))
    if len(idx) == 0:
        return CrossingResult(False)
    sx, sy, sr = cx[idx], cy[idx], r[idx]
    lo, hi = K.edge_touch(sx, sy, sr, x0, y0, x1, y1, axis)
    labels, edges = K.cluster(sx, sy, sr, x0, y0, x1, y1, True, _cell_size(sr, rect))
    if not K.crossing_from_labels(labels, lo, hi):
        return CrossingResult(False)
    chain = _forest_path(len(idx), edges, np.flatnonzero(lo), set(np.flatnonzero(hi).tolist()))
    return CrossingResult(True, [int(idx[i]) for i in chain])


def _forest_path(n, edges, sources, targets):
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    prev = {int(s): -1 for s in sources}
    queue = deque(prev)
    while queue:
        u = queue.popleft()
        if u in targets:
            path = []
            while u != -1:
                path.append(u)
                u = prev[u]
            return path[::-1]
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    return []


def vacant_crossing(query: CrossingQuery) -> CrossingResult:
    """Vacant crossing by duality: it exists iff no occupied crossing joins the other pair of sides.

    The answer equals the model's vacant crossing only when ``allowed_grains``
    holds every grain meeting the rectangle; the query's ``complete`` flag is
    echoed so reports can say whether that was guaranteed.
    """
    if query.phase != "vacant":
        raise ValueError("vacant_crossing needs phase='vacant'")
    axis = crossing_axis(query.rect, query.direction)
    cx, cy, r = _arrays(query.allowed_grains)
    blocked = occupied_crosses(cx, cy, r, query.rect, 1 - axis)
    return CrossingResult(not blocked, complete=query.complete)


@dataclass
class ComponentStructure:
    labels: np.ndarray          # root index per grain
    bboxes: dict                # root -> (xmin, ymin, xmax, ymax) of member discs
    clip: Optional[Rect] = None
    edge_nodes: Optional[dict] = None

    @property
    def classes(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for i, root in enumerate(self.labels.tolist()):
            groups.setdefault(root, []).append(i)
        return list(groups.values())

    @property
    def n_classes(self) -> int:
        return len(np.unique(self.labels)) if len(self.labels) else 0


def build_components(grains: GrainSet, clip: Optional[Rect] = None) -> ComponentStructure:
    """Partition grains into connected classes of the occupied set.

    Unclipped: grains are adjacent when their discs overlap.  Clipped: when
    their pieces inside ``clip`` intersect; grains missing ``clip`` become
    singletons.  Zero-radius grains are always singletons.
    """
    if grains.ambient_dim != 2:
        raise ValueError("components are planar only")
    cx, cy, r = _arrays(grains)
    n = len(r)
    labels = np.arange(n)
    active = np.flatnonzero(r > 0)
    if clip is not None:
        (x0, y0), (x1, y1) = clip.lo, clip.hi
        active = np.flatnonzero(K.meets_rect_mask(cx, cy, r, x0, y0, x1, y1))
    elif len(active):
        x0, y0 = cx[active].min(), cy[active].min()
        x1, y1 = cx[active].max(), cy[active].max()
    if len(active) > 1:
        sr = r[active]
        window = clip if clip is not None else Rect((x0, y0), (x1, y1))
        sub, _ = K.cluster(cx[active], cy[active], sr, x0, y0, x1, y1, clip is not None,
                           _cell_size(sr, window))
        labels[active] = active[sub]
    boxes = {}
    for i in range(n):
        root = int(labels[i])
        b = (cx[i] - r[i], cy[i] - r[i], cx[i] + r[i], cy[i] + r[i])
        if root in boxes:
            o = boxes[root]
            b = (min(o[0], b[0]), min(o[1], b[1]), max(o[2], b[2]), max(o[3], b[3]))
        boxes[root] = b
    return ComponentStructure(labels, boxes, clip)


def members_meeting(grains: GrainSet, comps: ComponentStructure, seed: Rect) -> np.ndarray:
    """Indices of grains in classes that meet the seed set."""
    cx, cy, r = _arrays(grains)
    (x0, y0), (x1, y1) = seed.lo, seed.hi
    hit = K.meets_rect_mask(cx, cy, r, x0, y0, x1, y1)
    roots = np.unique(comps.labels[hit])
    return np.flatnonzero(np.isin(comps.labels, roots))


def union_diameter(seed: Rect, centers: np.ndarray, radii: np.ndarray) -> float:
    """Diameter of ``seed`` united with discs; corners of the seed act as zero-radius discs."""
    corners = seed.corners()
    cx = np.concatenate([corners[:, 0], centers[:, 0]])
    cy = np.concatenate([corners[:, 1], centers[:, 1]])
    r = np.concatenate([np.zeros(len(corners)), radii])
    return float(K.union_diameter(np.ascontiguousarray(cx), np.ascontiguousarray(cy), r))


def component_diameter(grains: GrainSet, seed_set: Rect,
                       comps: Optional[ComponentStructure] = None) -> float:
    """D(seed ∪ every occupied component meeting the seed)."""
    if comps is None:
        comps = build_components(grains)
    idx = members_meeting(grains, comps, seed_set)
    return union_diameter(seed_set, grains.centers[idx], grains.radii[idx])


@dataclass
class FractionEstimate:
    hits: int
    probes: int
    point: float
    ci_lo: float
    ci_hi: float


def vacant_fraction(window: Rect, grains: GrainSet, n_probe: int, rng) -> FractionEstimate:
    """Share of uniform probe points in ``window`` outside every grain, with a Wilson interval."""
    if n_probe < 1:
        raise ValueError("n_probe must be >= 1")
    gen = as_generator(rng)
    pts = window.sample_uniform(gen, n_probe)
    cx, cy, r = _arrays(grains)
    cov = K.covered(np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), cx, cy, r)
    vac = int(n_probe - cov.sum())
    lo, hi = wilson_interval(vac, n_probe)
    return FractionEstimate(vac, n_probe, vac / n_probe, lo, hi)
