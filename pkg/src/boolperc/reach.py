"""Exact expected number of grains from a source region reaching a rectangle.

For a Poisson process of intensity ``lam`` with radius law ``mu``,

    Lambda = lam * integral over source of P[rho >= dist(x, target)] dx,

and the probability that at least one grain reaches is ``1 - exp(-Lambda)``.
By the co-area formula (``|grad dist| = 1`` off the target),

    Lambda = lam * |source ∩ target| + lam * int_0^inf P[rho >= t] L(t) dt,

where ``L(t)`` is the length of the level curve ``{dist = t}`` (a rounded
rectangle made of four segments and four quarter circles) inside the source.
``L(t)`` is computed exactly by cutting each piece where it crosses the
source's boundary primitives and testing the sub-piece midpoints.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .laws import RadiusLaw
from .regions import Rect, Region

TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    pass


def _level_pieces(target: Rect, t: float):
    (x0, y0), (x1, y1) = target.lo, target.hi
    segs = [((x0, y0 - t), (x1, y0 - t)), ((x0, y1 + t), (x1, y1 + t)),
            ((x0 - t, y0), (x0 - t, y1)), ((x1 + t, y0), (x1 + t, y1))]
    arcs = [((x1, y1), 0.0), ((x0, y1), 0.5 * math.pi), ((x0, y0), math.pi), ((x1, y0), 1.5 * math.pi)]
    return segs, arcs


def _seg_breaks(p, q, prims):
    px, py = p
    vx, vy = q[0] - px, q[1] - py
    a = vx * vx + vy * vy
    out = []
    for kind, c, extra in prims:
        if kind == "line":
            ux, uy = extra
            den = vx * uy - vy * ux
            if den != 0.0:
                out.append(((c[0] - px) * uy - (c[1] - py) * ux) / den)
        else:
            fx, fy = px - c[0], py - c[1]
            if a == 0.0:
                continue
            s0 = -(fx * vx + fy * vy) / a
            hx, hy = fx + s0 * vx, fy + s0 * vy
            rem = extra * extra - (hx * hx + hy * hy)
            if rem >= 0:
                half = math.sqrt(rem / a)
                out.extend((s0 - half, s0 + half))
    return out


def _arc_breaks(c, t, th0, prims):
    out = []
    for kind, pc, extra in prims:
        if kind == "line":
            ux, uy = extra
            nx, ny = -uy, ux
            val = (nx * (pc[0] - c[0]) + ny * (pc[1] - c[1])) / (t * math.hypot(nx, ny))
            psi = math.atan2(ny, nx)
        else:
            dx, dy = c[0] - pc[0], c[1] - pc[1]
            dd = math.hypot(dx, dy)
            if dd == 0.0:
                continue
            val = (extra * extra - dd * dd - t * t) / (2.0 * t * dd)
            psi = math.atan2(dy, dx)
        if -1.0 <= val <= 1.0:
            a = math.acos(val)
            for th in (psi + a, psi - a):
                out.append((th - th0) % TWO_PI)
    return out


def level_length(source: Region, target: Rect, t: float) -> float:
    """Length of ``{x in source : dist(x, target) = t}`` for ``t > 0``."""
    prims = source.primitives()
    segs, arcs = _level_pieces(target, t)
    mids, weights = [], []
    for p, q in segs:
        length = math.hypot(q[0] - p[0], q[1] - p[1])
        if length == 0.0:
            continue
        cuts = sorted({0.0, 1.0, *(s for s in _seg_breaks(p, q, prims) if 0.0 < s < 1.0)})
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            s = 0.5 * (s0 + s1)
            mids.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
            weights.append((s1 - s0) * length)
    quarter = 0.5 * math.pi
    for c, th0 in arcs:
        cuts = sorted({0.0, quarter, *(u for u in _arc_breaks(c, t, th0, prims) if 0.0 < u < quarter)})
        for u0, u1 in zip(cuts[:-1], cuts[1:]):
            th = th0 + 0.5 * (u0 + u1)
            mids.append((c[0] + t * math.cos(th), c[1] + t * math.sin(th)))
            weights.append((u1 - u0) * t)
    if not mids:
        return 0.0
    inside = source.contains(np.array(mids))
    return float(np.dot(inside, weights))


def _chord_length(source: Region, y: float, x0: float, x1: float) -> float:
    if x1 <= x0:
        return 0.0
    prims = source.primitives()
    p, q = (x0, y), (x1, y)
    cuts = sorted({0.0, 1.0, *(s for s in _seg_breaks(p, q, prims) if 0.0 < s < 1.0)})
    mids = [(x0 + 0.5 * (a + b) * (x1 - x0), y) for a, b in zip(cuts[:-1], cuts[1:])]
    inside = source.contains(np.array(mids))
    return float(sum((b - a) * (x1 - x0) for (a, b), ok in zip(zip(cuts[:-1], cuts[1:]), inside) if ok))


def area_within(source: Region, target: Rect) -> float:
    """``|source ∩ target|`` by integrating exact horizontal chord lengths."""
    (x0, y0), (x1, y1) = target.lo, target.hi
    if y1 <= y0 or x1 <= x0:
        return 0.0
    brk = set()
    for kind, c, extra in source.primitives():
        if kind == "line":
            if extra[1] == 0.0:
                brk.add(c[1])
        else:
            brk.update((c[1] - extra, c[1], c[1] + extra))
    pts = sorted(b for b in brk if y0 < b < y1)
    val, _ = integrate.quad(lambda y: _chord_length(source, y, x0, x1), y0, y1,
                            points=pts or None, limit=200, epsabs=0.0, epsrel=1e-10)
    return val


def _t_grid(t_lo: float, t_hi: float, law: RadiusLaw, target: Rect) -> list[float]:
    edges = {t_lo, t_hi}
    edges.update(b for b in law.breakpoints() if t_lo < b < t_hi)
    base = max(min(target.short_side, law.typical()) if target.short_side > 0 else law.typical(), 1e-12)
    t = base
    while t < t_hi:
        if t > t_lo:
            edges.add(t)
        t *= 2.0
    return sorted(edges)


def reach_mean(source: Region, target: Rect, law: RadiusLaw, lam: float,
               rtol: float = 1e-9, diagnostics: bool = False):
    """Expected number of grains centred in ``source`` that meet ``target``.

    Raises :class:`QuadratureError` if any piece of the adaptive quadrature
    misses ``rtol``.
    """
    core = area_within(source, target) if source.min_dist_to(target) == 0.0 else 0.0
    t_lo = max(source.min_dist_to(target), 0.0)
    t_hi = min(source.max_dist_to(target), law.sup)
    total, err_total = 0.0, 0.0
    pieces = []
    if t_hi > t_lo:
        grid = _t_grid(t_lo, t_hi, law, target)
        for a, b in zip(grid[:-1], grid[1:]):
            if b <= a:
                continue
            if law.tail_ge(a * (1 + 1e-15) if a > 0 else a) == 0.0:
                break
            f = lambda t: float(law.tail_ge(t)) * level_length(source, target, t)
            val, err, info = integrate.quad(f, a, b, limit=200, epsabs=0.0, epsrel=rtol * 1e-2,
                                            full_output=1)[:3]
            total += val
            err_total += err
            pieces.append((a, b, val, err, info["neval"]))
    if err_total > rtol * max(total, 1e-300) and err_total > 1e-14:
        raise QuadratureError(f"reach integral error {err_total:.3g} exceeds rtol {rtol} of value {total:.6g}; "
                              f"pieces (a, b, value, err, neval): {pieces}")
    out = lam * (core + total)
    if diagnostics:
        return out, {"core_area": core, "pieces": pieces, "abs_err": lam * err_total}
    return out


def reach_probability(source: Region, target: Rect, law: RadiusLaw, lam: float, rtol: float = 1e-9) -> float:
    """P[some grain centred in ``source`` meets ``target``] = 1 - exp(-Lambda)."""
    return -math.expm1(-reach_mean(source, target, law, lam, rtol))


def far_field_mean(law: RadiusLaw, lam: float, perimeter: float, reach: float) -> float:
    """Expected grains centred farther than ``reach`` from a convex set of given perimeter that still touch it.

    Level curves at distance ``t`` from a convex set have length ``perimeter + 2 pi t``.
    """
    if law.sup <= reach:
        return 0.0
    f = lambda t: float(law.tail_ge(t)) * (perimeter + TWO_PI * t)
    val, _ = integrate.quad(f, reach, math.inf, limit=200)
    return lam * val
