"""Compiled inner loops for planar grain connectivity.

Radii are inflated by ``TOL`` and rectangles expanded by ``TOL`` inside every
predicate, so configurations within ``TOL`` of a tangency count as touching.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

TOL = 1e-12
MAX_REGISTRATIONS = 20_000_000


@njit(cache=True)
def seg_disc_interval(px, py, qx, qy, cx, cy, r):
    """Parameter interval ``[lo, hi]`` of segment p->q inside the closed disc; lo > hi if empty."""
    vx = qx - px
    vy = qy - py
    a = vx * vx + vy * vy
    fx = px - cx
    fy = py - cy
    if a == 0.0:
        if fx * fx + fy * fy <= r * r:
            return 0.0, 1.0
        return 1.0, 0.0
    s0 = -(fx * vx + fy * vy) / a
    hx = fx + s0 * vx
    hy = fy + s0 * vy
    h2 = hx * hx + hy * hy
    if h2 > r * r:
        return 1.0, 0.0
    half = math.sqrt((r * r - h2) / a)
    lo = max(s0 - half, 0.0)
    hi = min(s0 + half, 1.0)
    return lo, hi


@njit(cache=True)
def disc_rect_dist2(cx, cy, x0, y0, x1, y1):
    dx = max(x0 - cx, 0.0, cx - x1)
    dy = max(y0 - cy, 0.0, cy - y1)
    return dx * dx + dy * dy


@njit(cache=True)
def disc_meets_rect(cx, cy, r, x0, y0, x1, y1):
    rr = r + TOL
    return disc_rect_dist2(cx, cy, x0, y0, x1, y1) <= rr * rr


@njit(cache=True)
def disc_meets_segment(cx, cy, r, px, py, qx, qy):
    lo, hi = seg_disc_interval(px, py, qx, qy, cx, cy, r + TOL)
    return lo <= hi


@njit(cache=True)
def discs_overlap(x1, y1, r1, x2, y2, r2):
    dx = x2 - x1
    dy = y2 - y1
    s = r1 + r2 + 2 * TOL
    return dx * dx + dy * dy <= s * s


@njit(cache=True)
def lens_meets_rect(x1, y1, r1, x2, y2, r2, x0, y0, xe, ye):
    """Whether B(c1, r1) ∩ B(c2, r2) ∩ [x0, xe] x [y0, ye] is non-empty.

    The intersection is non-empty iff a point of the lens lies in the rectangle
    or a rectangle edge meets the lens: otherwise the (connected) lens would sit
    strictly inside or strictly outside the rectangle.
    """
    r1 = r1 + TOL
    r2 = r2 + TOL
    x0 -= TOL
    y0 -= TOL
    xe += TOL
    ye += TOL
    dx = x2 - x1
    dy = y2 - y1
    d = math.sqrt(dx * dx + dy * dy)
    if d > r1 + r2:
        return False
    # a point of the lens on the centre segment
    if d == 0.0:
        wx, wy = x1, y1
    else:
        lo = max(0.0, 1.0 - r2 / d)
        hi = min(1.0, r1 / d)
        s = 0.5 * (lo + hi)
        wx = x1 + s * dx
        wy = y1 + s * dy
    if x0 <= wx <= xe and y0 <= wy <= ye:
        return True
    ex = (x0, xe, xe, x0)
    ey = (y0, y0, ye, ye)
    for k in range(4):
        px = ex[k]
        py = ey[k]
        qx = ex[(k + 1) % 4]
        qy = ey[(k + 1) % 4]
        a_lo, a_hi = seg_disc_interval(px, py, qx, qy, x1, y1, r1)
        if a_lo > a_hi:
            continue
        b_lo, b_hi = seg_disc_interval(px, py, qx, qy, x2, y2, r2)
        if b_lo > b_hi:
            continue
        if max(a_lo, b_lo) <= min(a_hi, b_hi):
            return True
    return False


@njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True)
def _union(parent, rank, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return False
    if rank[ra] < rank[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    if rank[ra] == rank[rb]:
        rank[ra] += 1
    return True


@njit(cache=True)
def _cell_ranges(cx, cy, r, x0, y0, nx, ny, cell):
    n = cx.shape[0]
    rng = np.empty((n, 4), dtype=np.int64)
    total = 0
    for i in range(n):
        ix0 = int(math.floor((cx[i] - r[i] - 2 * TOL - x0) / cell))
        ix1 = int(math.floor((cx[i] + r[i] + 2 * TOL - x0) / cell))
        iy0 = int(math.floor((cy[i] - r[i] - 2 * TOL - y0) / cell))
        iy1 = int(math.floor((cy[i] + r[i] + 2 * TOL - y0) / cell))
        ix0 = min(max(ix0, 0), nx - 1)
        ix1 = min(max(ix1, 0), nx - 1)
        iy0 = min(max(iy0, 0), ny - 1)
        iy1 = min(max(iy1, 0), ny - 1)
        rng[i, 0] = ix0
        rng[i, 1] = ix1
        rng[i, 2] = iy0
        rng[i, 3] = iy1
        total += (ix1 - ix0 + 1) * (iy1 - iy0 + 1)
    return rng, total


@njit(cache=True)
def cluster(cx, cy, r, x0, y0, x1, y1, clipped, cell):
    """Union-find over grain adjacency with a uniform hash grid.

    Grains register in every cell their bounding box overlaps inside the
    window ``[x0, x1] x [y0, y1]``.  Any witness of adjacency (a point of the
    lens, inside the clip rectangle when ``clipped``) lies in the window and
    in both bounding boxes, hence in a shared cell.

    Returns ``(parent, edges)``: a fully compressed parent array and the
    ``(i, j)`` pairs whose union merged two classes (a spanning forest).
    """
    n = cx.shape[0]
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    edges = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    n_edges = 0
    if n < 2:
        return parent, edges[:0]
    w = max(x1 - x0, 0.0)
    h = max(y1 - y0, 0.0)
    if cell <= 0.0:
        cell = max(w, h, 1.0)
    while True:
        nx = max(1, int(math.ceil(w / cell)))
        ny = max(1, int(math.ceil(h / cell)))
        if nx * ny <= 4 * n + 4096:
            ranges, total = _cell_ranges(cx, cy, r, x0, y0, nx, ny, cell)
            if total <= MAX_REGISTRATIONS:
                break
        cell *= 2.0
    counts = np.zeros(nx * ny + 1, dtype=np.int64)
    for i in range(n):
        for ix in range(ranges[i, 0], ranges[i, 1] + 1):
            for iy in range(ranges[i, 2], ranges[i, 3] + 1):
                counts[ix * ny + iy + 1] += 1
    for k in range(nx * ny):
        counts[k + 1] += counts[k]
    members = np.empty(total, dtype=np.int64)
    fill = counts[:-1].copy()
    for i in range(n):
        for ix in range(ranges[i, 0], ranges[i, 1] + 1):
            for iy in range(ranges[i, 2], ranges[i, 3] + 1):
                c = ix * ny + iy
                members[fill[c]] = i
                fill[c] += 1
    for c in range(nx * ny):
        start = counts[c]
        stop = counts[c + 1]
        for p in range(start, stop):
            a = members[p]
            for q in range(p + 1, stop):
                b = members[q]
                if _find(parent, a) == _find(parent, b):
                    continue
                if clipped:
                    ok = lens_meets_rect(cx[a], cy[a], r[a], cx[b], cy[b], r[b], x0, y0, x1, y1)
                else:
                    ok = discs_overlap(cx[a], cy[a], r[a], cx[b], cy[b], r[b])
                if ok:
                    _union(parent, rank, a, b)
                    edges[n_edges, 0] = a
                    edges[n_edges, 1] = b
                    n_edges += 1
    for i in range(n):
        parent[i] = _find(parent, i)
    return parent, edges[:n_edges]


@njit(cache=True)
def meets_rect_mask(cx, cy, r, x0, y0, x1, y1):
    n = cx.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if r[i] > 0.0 and disc_meets_rect(cx[i], cy[i], r[i], x0, y0, x1, y1):
            out[i] = True
    return out


@njit(cache=True)
def edge_touch(cx, cy, r, x0, y0, x1, y1, axis):
    """Which grains touch the low / high target edge for a crossing along ``axis``."""
    n = cx.shape[0]
    lo = np.zeros(n, dtype=np.bool_)
    hi = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if axis == 0:
            lo[i] = disc_meets_segment(cx[i], cy[i], r[i], x0, y0, x0, y1)
            hi[i] = disc_meets_segment(cx[i], cy[i], r[i], x1, y0, x1, y1)
        else:
            lo[i] = disc_meets_segment(cx[i], cy[i], r[i], x0, y0, x1, y0)
            hi[i] = disc_meets_segment(cx[i], cy[i], r[i], x0, y1, x1, y1)
    return lo, hi


@njit(cache=True)
def crossing_from_labels(labels, lo, hi):
    n = labels.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if lo[i]:
            seen[labels[i]] = True
    for i in range(n):
        if hi[i] and seen[labels[i]]:
            return True
    return False


@njit(cache=True)
def crosses(cx, cy, r, x0, y0, x1, y1, axis, cell):
    """Occupied crossing of the rectangle along ``axis`` (0: left-right, 1: bottom-top)."""
    keep = meets_rect_mask(cx, cy, r, x0, y0, x1, y1)
    idx = np.nonzero(keep)[0]
    if idx.shape[0] == 0:
        return False
    sx = cx[idx]
    sy = cy[idx]
    sr = r[idx]
    lo, hi = edge_touch(sx, sy, sr, x0, y0, x1, y1, axis)
    if not lo.any() or not hi.any():
        return False
    labels, _ = cluster(sx, sy, sr, x0, y0, x1, y1, True, cell)
    return crossing_from_labels(labels, lo, hi)


@njit(cache=True)
def covered(px, py, cx, cy, r):
    """For each probe point, whether some closed disc contains it."""
    m = px.shape[0]
    n = cx.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    for k in range(m):
        for i in range(n):
            dx = px[k] - cx[i]
            dy = py[k] - cy[i]
            if dx * dx + dy * dy <= r[i] * r[i]:
                out[k] = True
                break
    return out


@njit(cache=True)
def union_diameter(cx, cy, r):
    """Diameter of a finite union of closed discs: max over pairs of |ci - cj| + ri + rj.

    Discs that cannot take part in a pair beating a cheap lower bound are
    pruned first, using distances to the centroid.
    """
    n = cx.shape[0]
    if n == 0:
        return 0.0
    mx = 0.0
    my = 0.0
    for i in range(n):
        mx += cx[i]
        my += cy[i]
    mx /= n
    my /= n
    reach = np.empty(n)
    far = 0.0
    for i in range(n):
        reach[i] = math.sqrt((cx[i] - mx) ** 2 + (cy[i] - my) ** 2) + r[i]
        far = max(far, reach[i])
    # lower bound from 16 support directions
    best = 0.0
    for i in range(n):
        best = max(best, 2.0 * r[i])
    for k in range(16):
        th = math.pi * k / 16
        ux = math.cos(th)
        uy = math.sin(th)
        hmax = -1e308
        hmin = 1e308
        for i in range(n):
            p = cx[i] * ux + cy[i] * uy
            hmax = max(hmax, p + r[i])
            hmin = min(hmin, p - r[i])
        best = max(best, hmax - hmin)
    cand = np.nonzero(reach + far >= best)[0]
    for a in range(cand.shape[0]):
        i = cand[a]
        for b in range(a + 1, cand.shape[0]):
            j = cand[b]
            d = math.sqrt((cx[i] - cx[j]) ** 2 + (cy[i] - cy[j]) ** 2) + r[i] + r[j]
            if d > best:
                best = d
    return best
