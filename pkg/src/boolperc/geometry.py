"""Strips, neighbourhoods and the 74-rectangle knitting layout.

Layout coordinates are computed exactly with :class:`fractions.Fraction` and
rounded once, so the layout is reproducible bit-for-bit and every inequality
between exact coordinates survives rounding (rounding is monotone).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import _kernels as K
from .model import Grain
from .regions import Disc, Neighborhood, Rect

DEFAULT_REACH_FACTOR = 10 ** 6
LAYOUT_SCHEMA = "boolperc.layout/1"


def make_strip(alpha: float, orientation: str = "horizontal", center=(0.0, 0.0)) -> Rect:
    """The closed 10*alpha by alpha strip (alpha by 10*alpha when vertical)."""
    if not alpha > 0:
        raise ValueError("strip scale alpha must be positive")
    if orientation not in ("horizontal", "vertical"):
        raise ValueError("orientation must be 'horizontal' or 'vertical'")
    w, h = (10 * alpha, alpha) if orientation == "horizontal" else (alpha, 10 * alpha)
    cx, cy = center
    return Rect((cx - w / 2, cy - h / 2), (cx + w / 2, cy + h / 2), orientation)


def neighborhood(rect: Rect, r: float):
    if r < 0:
        raise ValueError("neighbourhood radius must be >= 0")
    if r == 0:
        return rect
    return Neighborhood(rect, r)


def _exact_rect(alpha: Fraction, cx, cy, w, h, orientation) -> Rect:
    lo = (float((cx - w / 2) * alpha), float((cy - h / 2) * alpha))
    hi = (float((cx + w / 2) * alpha), float((cy + h / 2) * alpha))
    return Rect(lo, hi, orientation)


@dataclass
class KnittingLayout:
    """Rectangles R_1..R_74 (``rects[i-1]``), bands T and its mirror, and reach discs."""

    alpha: float
    reach_factor: float
    rects: list
    band_low: Rect
    band_high: Rect
    disks: list
    parent: Rect
    h_step: float = 5.0

    def rect(self, i: int) -> Rect:
        return self.rects[i - 1]

    @property
    def horizontal_low(self) -> list[int]:
        return [i for i in range(1, 38) if self.rect(i).orientation == "horizontal"]

    @property
    def vertical_low(self) -> list[int]:
        return [i for i in range(1, 38) if self.rect(i).orientation == "vertical"]

    def to_dict(self) -> dict:
        return {
            "schema": LAYOUT_SCHEMA,
            "alpha": self.alpha,
            "reach_factor": self.reach_factor,
            "parent_strip": self.parent.to_dict(),
            "bands": {"T": self.band_low.to_dict(), "T_mirror": self.band_high.to_dict()},
            "rects": [dict(index=i + 1, kind=r.orientation, lo=list(r.lo), hi=list(r.hi))
                      for i, r in enumerate(self.rects)],
            "disks": [dict(index=i + 1, center=list(d.center), radius=d.radius)
                      for i, d in enumerate(self.disks)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def build_knitting_layout(alpha: float, reach_factor: float = DEFAULT_REACH_FACTOR,
                        h_step: float = 5.0) -> KnittingLayout:
    """Lay out the 37 rectangles knitting a crossing of the lower band, plus mirrors.

    ``h_step`` (in units of alpha) spaces the horizontal rectangles; 5 gives
    the standard layout, other values exist to build counterexamples.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if reach_factor < 10:
        raise ValueError("reach factor must be >= 10")
    a = Fraction(alpha)
    step = Fraction(h_step)
    n_h = 19 if h_step == 5 else int(Fraction(90) / step) + 1
    lower = []
    first = Fraction(-45)
    for k in range(n_h):
        lower.append(_exact_rect(a, first + k * step, Fraction(-4), Fraction(10), Fraction(1), "horizontal"))
    for k in range(n_h - 1):
        cx = first + k * step + step / 2
        lower.append(_exact_rect(a, cx, Fraction(-7), Fraction(1), Fraction(10), "vertical"))
    upper = [Rect((r.lo[0], -r.hi[1]), (r.hi[0], -r.lo[1]), r.orientation) for r in lower]
    rects = lower + upper
    band_low = _exact_rect(a, Fraction(0), Fraction(-4), Fraction(100), Fraction(1), "horizontal")
    band_high = Rect((band_low.lo[0], -band_low.hi[1]), (band_low.hi[0], -band_low.lo[1]), "horizontal")
    radius = float(Fraction(reach_factor) * a)
    disks = [Disc(tuple(r.center), radius) for r in rects]
    parent = _exact_rect(a, Fraction(0), Fraction(0), Fraction(100), Fraction(10), "horizontal")
    return KnittingLayout(float(alpha), float(reach_factor), rects, band_low, band_high, disks, parent,
                        float(h_step))


@dataclass
class KnittingReport:
    junctions: list = field(default_factory=list)
    ends: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(j["pass"] for j in self.junctions) and all(e["pass"] for e in self.ends)

    @property
    def failed(self) -> list:
        return [j for j in self.junctions + self.ends if not j["pass"]]

    def to_dict(self):
        return {"passed": self.passed, "junctions": self.junctions, "ends": self.ends}


def _junction(hor_a: Rect, hor_b: Rect, vert: Rect, band: Rect) -> dict:
    o = vert.intersection(band)
    checks = {}
    if o is None:
        checks = {"overlap_nonempty": False}
    else:
        checks = {
            "overlap_nonempty": True,
            "spans_vertical_width": o.lo[0] == vert.lo[0] and o.hi[0] == vert.hi[0],
            "spans_band_height": o.lo[1] == band.lo[1] and o.hi[1] == band.hi[1],
            "inside_left": hor_a.contains_rect(o),
            "inside_right": hor_b.contains_rect(o),
        }
    return {"checks": checks, "pass": all(checks.values())}


def verify_knitting(layout: KnittingLayout) -> KnittingReport:
    """Check every junction where a vertical rectangle stitches two horizontal ones.

    A left-right crossing of a horizontal rectangle traverses the overlap
    ``O = R_v ∩ T`` from side to side, and a top-bottom crossing of ``R_v``
    traverses it from bottom to top; when ``O`` spans the full width of
    ``R_v``, the full height of ``T`` and sits inside both horizontals, the
    two crossings must meet.
    """
    report = KnittingReport()
    n37 = len(layout.rects) // 2
    for half, band, offset in (("low", layout.band_low, 0), ("high", layout.band_high, n37)):
        hs = [offset + i for i in range(1, n37 + 1) if layout.rect(offset + i).orientation == "horizontal"]
        vs = [offset + i for i in range(1, n37 + 1) if layout.rect(offset + i).orientation == "vertical"]
        for k in range(len(hs) - 1):
            if k < len(vs):
                j = _junction(layout.rect(hs[k]), layout.rect(hs[k + 1]), layout.rect(vs[k]), band)
            else:
                j = {"checks": {"bridge_exists": False}, "pass": False}
            j.update(half=half, junction=k + 1, horizontals=[hs[k], hs[k + 1]],
                     vertical=vs[k] if k < len(vs) else None)
            report.junctions.append(j)
        first, last = layout.rect(hs[0]), layout.rect(hs[-1])
        ends = {
            "left_end": first.lo[0] == band.lo[0],
            "right_end": last.hi[0] == band.hi[0],
            "horizontals_fill_band": all(layout.rect(i).lo[1] == band.lo[1] and layout.rect(i).hi[1] == band.hi[1]
                                         for i in hs),
        }
        report.ends.append({"half": half, "checks": ends, "pass": all(ends.values())})
    return report


def layout_invariants(layout: KnittingLayout) -> dict:
    """Containment and disjointness facts the union bound relies on."""
    a = layout.alpha
    big = layout.parent
    lower = layout.rects[:37]
    upper = layout.rects[37:]
    contained = []
    for r in lower:
        # farthest point of the alpha-neighbourhood from the parent strip:
        # a corner of r pushed out by alpha
        worst = max(big.dist(c)[0] for c in r.corners()) + a
        contained.append(worst <= 10 * a and r.hi[1] + a <= 0.0)
    disjoint = all(ri.dist_to_rect(rj) > 2 * a for ri in lower for rj in upper)
    mirrored = all(u.lo == (l.lo[0], -l.hi[1]) and u.hi == (l.hi[0], -l.lo[1])
                   for l, u in zip(lower, upper))
    return {"contained_in_lower_half": all(contained), "neighborhoods_disjoint": disjoint,
            "mirrored": mirrored}


# Python-level predicates; the compiled versions live in _kernels.

def discs_overlap(g1: Grain, g2: Grain) -> bool:
    return bool(K.discs_overlap(g1.center[0], g1.center[1], g1.radius, g2.center[0], g2.center[1], g2.radius))


def disc_meets_rect(g: Grain, rect: Rect) -> bool:
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    return bool(K.disc_meets_rect(g.center[0], g.center[1], g.radius, x0, y0, x1, y1))


def lens_meets_rect(g1: Grain, g2: Grain, rect: Rect) -> bool:
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    return bool(K.lens_meets_rect(g1.center[0], g1.center[1], g1.radius,
                                  g2.center[0], g2.center[1], g2.radius, x0, y0, x1, y1))


def disc_meets_segment(g: Grain, p, q) -> bool:
    return bool(K.disc_meets_segment(g.center[0], g.center[1], g.radius, p[0], p[1], q[0], q[1]))


def strip_sequence(b: float, n_max: int) -> list[Rect]:
    """Strips S_1..S_n of scales 10**n * b about the origin, horizontal for odd n."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = []
    for n in range(1, n_max + 1):
        alpha = float(Fraction(10) ** n * Fraction(b))
        out.append(make_strip(alpha, "horizontal" if n % 2 == 1 else "vertical"))
    return out


def crosses_short_way(inner: Rect, outer: Rect) -> bool:
    """Whether ``inner`` spans ``outer`` between its two long sides."""
    ax = 0 if outer.widths[1] > outer.widths[0] else 1  # axis along the short side of outer
    return inner.lo[ax] <= outer.lo[ax] and inner.hi[ax] >= outer.hi[ax]


def rect_witness_json(rect: Rect, grains, layout: Optional[KnittingLayout] = None) -> dict:
    d = layout.to_dict() if layout else {"schema": LAYOUT_SCHEMA}
    d["witness"] = {"rect": rect.to_dict(),
                    "grains": [{"center": list(g.center), "radius": g.radius} for g in grains]}
    return d
