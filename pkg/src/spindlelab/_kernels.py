"""Compiled kernels for planar hulls and disc-polygon areas.

Everything here works on parallel coordinate arrays ``xs``/``ys`` and on
integer index arrays into them, so the same point buffer can be re-hulled
with different subsets removed (difference operators) without copying.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# number of support directions used by the interior prefilter
_PREFILTER_DIRS = 32
_PREFILTER_MIN_POINTS = 64


@njit(cache=True, nogil=True)
def theta_minus_sin(theta):
    """``theta - sin(theta)`` without cancellation for small angles."""
    if theta < 0.3:
        t2 = theta * theta
        series = 1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0 * (1.0 - t2 / 156.0))))
        return theta * t2 / 6.0 * series
    return theta - np.sin(theta)


@njit(cache=True, nogil=True)
def segment_area(chord, r):
    """Area between a chord of length ``chord`` and the shorter radius-r arc over it."""
    ratio = chord / (2.0 * r)
    if ratio >= 1.0:
        return 0.5 * np.pi * r * r
    theta = 2.0 * np.arcsin(ratio)
    return 0.5 * r * r * theta_minus_sin(theta)


@njit(cache=True, nogil=True)
def _cross(xs, ys, o, a, b):
    return (xs[a] - xs[o]) * (ys[b] - ys[o]) - (ys[a] - ys[o]) * (xs[b] - xs[o])


@njit(cache=True, nogil=True)
def prefilter(xs, ys):
    """Indices of points that may be convex hull vertices.

    Points strictly inside the polygon spanned by the extreme points in
    ``_PREFILTER_DIRS`` directions are discarded (Akl-Toussaint style).
    """
    n = xs.size
    if n < _PREFILTER_MIN_POINTS:
        return np.arange(n)
    nd = _PREFILTER_DIRS
    cs = np.empty(nd)
    sn = np.empty(nd)
    for j in range(nd):
        a = 2.0 * np.pi * j / nd
        cs[j] = np.cos(a)
        sn[j] = np.sin(a)
    best = np.full(nd, -np.inf)
    ext = np.zeros(nd, np.int64)
    for i in range(n):
        x = xs[i]
        y = ys[i]
        for j in range(nd):
            v = x * cs[j] + y * sn[j]
            if v > best[j]:
                best[j] = v
                ext[j] = i
    # polygon vertices: extreme points in direction order, consecutive repeats dropped
    poly = np.empty(nd, np.int64)
    k = 0
    for j in range(nd):
        if k == 0 or ext[j] != poly[k - 1]:
            poly[k] = ext[j]
            k += 1
    while k > 1 and poly[k - 1] == poly[0]:
        k -= 1
    if k < 3:
        return np.arange(n)
    cx = 0.0
    cy = 0.0
    for j in range(k):
        cx += xs[poly[j]]
        cy += ys[poly[j]]
    cx /= k
    cy /= k
    # squared radius of a disc around (cx, cy) that lies inside the polygon
    rin2 = np.inf
    for j in range(k):
        a = poly[j]
        b = poly[(j + 1) % k]
        ex = xs[b] - xs[a]
        ey = ys[b] - ys[a]
        el2 = ex * ex + ey * ey
        if el2 == 0.0:
            continue
        c = ex * (cy - ys[a]) - ey * (cx - xs[a])
        if c <= 0.0:
            return np.arange(n)
        dist2 = c * c / el2
        if dist2 < rin2:
            rin2 = dist2
    keep = np.empty(n, np.int64)
    m = 0
    for i in range(n):
        dx = xs[i] - cx
        dy = ys[i] - cy
        if dx * dx + dy * dy < rin2 * (1.0 - 1e-9):
            continue
        inside = True
        for j in range(k):
            a = poly[j]
            b = poly[(j + 1) % k]
            if (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]) <= 0.0:
                inside = False
                break
        if not inside:
            keep[m] = i
            m += 1
    return keep[:m]


@njit(cache=True, nogil=True)
def convex_hull(xs, ys, cand):
    """Monotone chain hull of ``cand``; CCW vertex indices, collinear points dropped."""
    m = cand.size
    if m <= 1:
        return cand.copy()
    o1 = np.argsort(ys[cand], kind="mergesort")
    c1 = cand[o1]
    o2 = np.argsort(xs[c1], kind="mergesort")
    s = c1[o2]
    h = np.empty(2 * m, np.int64)
    k = 0
    for i in range(m):
        p = s[i]
        while k >= 2 and _cross(xs, ys, h[k - 2], h[k - 1], p) <= 0.0:
            k -= 1
        h[k] = p
        k += 1
    lo = k + 1
    for i in range(m - 2, -1, -1):
        p = s[i]
        while k >= lo and _cross(xs, ys, h[k - 2], h[k - 1], p) <= 0.0:
            k -= 1
        h[k] = p
        k += 1
    return h[: k - 1]


@njit(cache=True, nogil=True)
def merge_close(xs, ys, cyc, tol):
    """Drop cyclically consecutive vertices closer than ``tol`` to their predecessor."""
    k = cyc.size
    if k <= 1:
        return cyc
    out = np.empty(k, np.int64)
    m = 0
    tol2 = tol * tol
    for i in range(k):
        p = cyc[i]
        if m > 0:
            q = out[m - 1]
            dx = xs[p] - xs[q]
            dy = ys[p] - ys[q]
            if dx * dx + dy * dy <= tol2:
                continue
        out[m] = p
        m += 1
    while m > 1:
        dx = xs[out[m - 1]] - xs[out[0]]
        dy = ys[out[m - 1]] - ys[out[0]]
        if dx * dx + dy * dy <= tol2:
            m -= 1
        else:
            break
    return out[:m]


@njit(cache=True, nogil=True)
def max_pairwise_distance(xs, ys, idx):
    best = 0.0
    k = idx.size
    for i in range(k):
        for j in range(i + 1, k):
            dx = xs[idx[i]] - xs[idx[j]]
            dy = ys[idx[i]] - ys[idx[j]]
            d2 = dx * dx + dy * dy
            if d2 > best:
                best = d2
    return np.sqrt(best)


@njit(cache=True, nogil=True)
def _center_tol(r, eps):
    # arc centers sit ~r away, so their rounding error grows with r
    return eps + 64.0 * 2.220446049250313e-16 * r


@njit(cache=True, nogil=True)
def _inside_left_disc(ax, ay, cx, cy, bx, by, r, eps):
    # b strictly inside the radius-r disc through a, c whose center is left of a->c
    dx = cx - ax
    dy = cy - ay
    d2 = dx * dx + dy * dy
    d = np.sqrt(d2)
    h2 = r * r - 0.25 * d2
    h = np.sqrt(h2) if h2 > 0.0 else 0.0
    ox = 0.5 * (ax + cx) - h * dy / d
    oy = 0.5 * (ay + cy) + h * dx / d
    ex = bx - ox
    ey = by - oy
    return np.sqrt(ex * ex + ey * ey) < r - _center_tol(r, eps)


@njit(cache=True, nogil=True)
def spindle_reduce(xs, ys, hull, r, eps):
    """Remove convex hull vertices covered by the spindle of their neighbours.

    Runs a worklist pass over the CCW cycle until no middle vertex of a
    consecutive triple lies strictly inside the outer radius-r arc disc of
    its neighbours.
    """
    k = hull.size
    if k <= 2:
        return hull.copy()
    prv = np.empty(k, np.int64)
    nxt = np.empty(k, np.int64)
    alive = np.ones(k, np.bool_)
    for i in range(k):
        prv[i] = (i - 1) % k
        nxt[i] = (i + 1) % k
    stack = np.empty(3 * k + 3, np.int64)
    top = 0
    for i in range(k - 1, -1, -1):
        stack[top] = i
        top += 1
    count = k
    while top > 0 and count > 2:
        top -= 1
        b = stack[top]
        if not alive[b]:
            continue
        a = prv[b]
        c = nxt[b]
        pa = hull[a]
        pb = hull[b]
        pc = hull[c]
        if _inside_left_disc(xs[pa], ys[pa], xs[pc], ys[pc], xs[pb], ys[pb], r, eps):
            alive[b] = False
            nxt[a] = c
            prv[c] = a
            count -= 1
            stack[top] = a
            top += 1
            stack[top] = c
            top += 1
    start = 0
    while not alive[start]:
        start += 1
    out = np.empty(count, np.int64)
    j = start
    for i in range(count):
        out[i] = hull[j]
        j = nxt[j]
    return out


@njit(cache=True, nogil=True)
def disc_polygon_area(xs, ys, verts, r):
    """Shoelace area of the vertex polygon plus one circular segment per arc."""
    k = verts.size
    if k < 2:
        return 0.0
    if k == 2:
        dx = xs[verts[1]] - xs[verts[0]]
        dy = ys[verts[1]] - ys[verts[0]]
        return 2.0 * segment_area(np.sqrt(dx * dx + dy * dy), r)
    # shoelace relative to the first vertex keeps the products small
    x0 = xs[verts[0]]
    y0 = ys[verts[0]]
    twice = 0.0
    segs = 0.0
    for i in range(k):
        a = verts[i]
        b = verts[(i + 1) % k]
        twice += (xs[a] - x0) * (ys[b] - y0) - (xs[b] - x0) * (ys[a] - y0)
        dx = xs[b] - xs[a]
        dy = ys[b] - ys[a]
        segs += segment_area(np.sqrt(dx * dx + dy * dy), r)
    return 0.5 * twice + segs


@njit(cache=True, nogil=True)
def arcs_consistent(xs, ys, verts, r, eps):
    """True when every vertex lies in the closed disc of every boundary arc."""
    k = verts.size
    if k <= 2:
        return True
    tol = _center_tol(r, eps)
    for i in range(k):
        a = verts[i]
        c = verts[(i + 1) % k]
        dx = xs[c] - xs[a]
        dy = ys[c] - ys[a]
        d2 = dx * dx + dy * dy
        d = np.sqrt(d2)
        h2 = r * r - 0.25 * d2
        h = np.sqrt(h2) if h2 > 0.0 else 0.0
        ox = 0.5 * (xs[a] + xs[c]) - h * dy / d
        oy = 0.5 * (ys[a] + ys[c]) + h * dx / d
        for j in range(k):
            ex = xs[verts[j]] - ox
            ey = ys[verts[j]] - oy
            if np.sqrt(ex * ex + ey * ey) > r + tol:
                return False
    return True


@njit(cache=True, nogil=True)
def spindle_hull_indices(xs, ys, cand, r, eps, dedupe_tol):
    """Spindle hull vertex indices of the points ``cand``.

    Returns ``(verts, diameter)``; the caller must reject the result when
    ``diameter > 2r``.
    """
    h = convex_hull(xs, ys, cand)
    h = merge_close(xs, ys, h, dedupe_tol)
    diam = max_pairwise_distance(xs, ys, h)
    if diam > 2.0 * r + eps:
        return h, diam
    return spindle_reduce(xs, ys, h, r, eps), diam


@njit(cache=True, nogil=True)
def hull_area_count(xs, ys, r, eps):
    """Area and vertex count of the spindle hull of all points.

    Returns NaN area with count -1 when the points are not spindle
    representable (diameter above 2r, or no radius-r disc holds them all).
    """
    cand = prefilter(xs, ys)
    verts, diam = spindle_hull_indices(xs, ys, cand, r, eps, 1e-12)
    if diam > 2.0 * r + eps or not arcs_consistent(xs, ys, verts, r, eps):
        return np.nan, -1
    return disc_polygon_area(xs, ys, verts, r), verts.size


@njit(cache=True, nogil=True)
def _without(idx, drop_a, drop_b):
    out = np.empty(idx.size, np.int64)
    m = 0
    for v in idx:
        if v != drop_a and v != drop_b:
            out[m] = v
            m += 1
    return out[:m]


@njit(cache=True, nogil=True)
def hull_layers(xs, ys, depth):
    """Union of the first ``depth`` convex layers (all points if fewer remain)."""
    n = xs.size
    remaining = np.ones(n, np.bool_)
    taken = np.empty(n, np.int64)
    m = 0
    cand = prefilter(xs, ys)
    for layer in range(depth):
        if layer > 0:
            rest = np.empty(n, np.int64)
            q = 0
            for i in range(n):
                if remaining[i]:
                    rest[q] = i
                    q += 1
            cand = rest[:q]
            if cand.size <= 3:
                for v in cand:
                    taken[m] = v
                    m += 1
                    remaining[v] = False
                break
        h = convex_hull(xs, ys, cand)
        # keep collinear/duplicate stragglers out of the next layer too
        for v in h:
            taken[m] = v
            m += 1
            remaining[v] = False
    return np.sort(taken[:m])


@njit(cache=True, nogil=True)
def _area_of(xs, ys, cand, r, eps):
    verts, diam = spindle_hull_indices(xs, ys, cand, r, eps, 1e-12)
    return disc_polygon_area(xs, ys, verts, r), verts


@njit(cache=True, nogil=True)
def difference_stats(xs, ys, r, eps, zero_tol, brute_force):
    """First and second order difference statistics of the hull area.

    Returns ``(area, f0, s, pairs)`` where ``s[p-1] = sum_i |D_i A|^p`` for
    p = 1..4 over all input points and ``pairs`` counts unordered pairs with
    ``|D_{i,j} A| > zero_tol``.  With ``brute_force`` every point and every
    pair is evaluated by full re-hulling; otherwise only the candidates that
    can be non-zero are evaluated, using the first three convex layers.
    """
    n = xs.size
    if brute_force:
        cand = np.arange(n)
    else:
        cand = hull_layers(xs, ys, 3)
    area, verts = _area_of(xs, ys, cand, r, eps)
    f0 = verts.size
    s = np.zeros(4)
    a_minus = np.full(n, area)
    if brute_force:
        singles = np.arange(n)
    else:
        singles = verts
    ef = []
    et = []
    for i in singles:
        ai, vi = _area_of(xs, ys, _without(cand, i, -1), r, eps)
        a_minus[i] = ai
        d = abs(area - ai)
        s[0] += d
        s[1] += d * d
        s[2] += d * d * d
        s[3] += d * d * d * d
        if not brute_force:
            for v in vi:
                is_old = False
                for w in verts:
                    if w == v:
                        is_old = True
                        break
                if not is_old:
                    ef.append(i)
                    et.append(v)
    pairs = 0
    if brute_force:
        for i in range(n):
            for j in range(i + 1, n):
                aij, _ = _area_of(xs, ys, _without(cand, i, j), r, eps)
                dij = area - a_minus[i] - a_minus[j] + aij
                if abs(dij) > zero_tol:
                    pairs += 1
        return area, f0, s, pairs
    # candidate pairs: hull vertices at cyclic distance <= 2, and (vertex, newly exposed point)
    pi = []
    pj = []
    k = f0
    for a in range(k):
        for step in range(1, 3):
            b = (a + step) % k
            if b == a:
                continue
            pi.append(verts[a])
            pj.append(verts[b])
    for q in range(len(ef)):
        pi.append(ef[q])
        pj.append(et[q])
    # deduplicate unordered pairs
    npairs = len(pi)
    lo = np.empty(npairs, np.int64)
    hi = np.empty(npairs, np.int64)
    for q in range(npairs):
        a = pi[q]
        b = pj[q]
        if a < b:
            lo[q] = a
            hi[q] = b
        else:
            lo[q] = b
            hi[q] = a
    key = lo * n + hi
    order = np.argsort(key)
    last = -1
    for q in order:
        if key[q] == last:
            continue
        last = key[q]
        i = lo[q]
        j = hi[q]
        aij, _ = _area_of(xs, ys, _without(cand, i, j), r, eps)
        dij = area - a_minus[i] - a_minus[j] + aij
        if abs(dij) > zero_tol:
            pairs += 1
    return area, f0, s, pairs
