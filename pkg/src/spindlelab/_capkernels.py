"""Compiled cap areas for origin-centred ellipses ``(a cos t, b sin t)``.

Caps are addressed by their vertex parameter ``t`` and height ``h``.  Cap
areas are written as differences of segment areas evaluated through
``theta - sin(theta)``, which keeps tiny caps at full relative precision.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._kernels import theta_minus_sin

_BISECT_STEPS = 64
_SEARCH_GRID = 256


@njit(cache=True, nogil=True)
def _normal(a, b, t):
    c = np.cos(t)
    s = np.sin(t)
    nx = b * c
    ny = a * s
    nn = np.hypot(nx, ny)
    return nx / nn, ny / nn


@njit(cache=True, nogil=True)
def linear_cap(a, b, t, h):
    """Area of the cap with vertex ``t`` cut by the tangent line shifted inward by ``h``."""
    if h <= 0.0:
        return 0.0
    c = np.cos(t)
    s = np.sin(t)
    # affine image of the unit disc: the cap maps to a unit-disc segment of height h/m
    m = np.hypot(a * b * c, a * b * s) / np.hypot(b * c, a * s)
    e = h / m
    if e >= 2.0:
        return np.pi * a * b
    theta = 4.0 * np.arcsin(np.sqrt(0.5 * e))
    return 0.5 * a * b * theta_minus_sin(theta)


@njit(cache=True, nogil=True)
def _g(a, b, px, py, r, tau):
    dx = a * np.cos(tau) - px
    dy = b * np.sin(tau) - py
    return dx * dx + dy * dy - r * r


@njit(cache=True, nogil=True)
def _root(a, b, px, py, r, lo, hi, g_lo_positive):
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        gm = _g(a, b, px, py, r, mid)
        if (gm > 0.0) == g_lo_positive:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def disc_cap(a, b, t, h, r):
    """Area of ``K \\ open disc(p, r)`` with ``p = x0 - (r + h) u_x0`` and ``x0 = gamma(t)``.

    Assumes the circle crosses the boundary at most twice; when it misses
    the interior of K altogether the whole area is returned.
    """
    if h <= 0.0:
        return 0.0
    ox = a * np.cos(t)
    oy = b * np.sin(t)
    ux, uy = _normal(a, b, t)
    px = ox - (r + h) * ux
    py = oy - (r + h) * uy
    tin = t + np.pi
    if _g(a, b, px, py, r, tin) >= 0.0:
        best = np.inf
        for k in range(1, _SEARCH_GRID):
            tau = t + 2.0 * np.pi * k / _SEARCH_GRID
            val = _g(a, b, px, py, r, tau)
            if val < best:
                best = val
                tin = tau
        if best >= 0.0:
            return np.pi * a * b
    t2 = _root(a, b, px, py, r, t, tin, True)
    t1 = _root(a, b, px, py, r, tin - 2.0 * np.pi, t, False)
    # cap = elliptic segment beyond the common chord minus the circular segment beyond it
    x1 = a * np.cos(t1)
    y1 = b * np.sin(t1)
    x2 = a * np.cos(t2)
    y2 = b * np.sin(t2)
    ex = x2 - x1
    ey = y2 - y1
    chord = np.hypot(ex, ey)
    ell = 0.5 * a * b * theta_minus_sin(t2 - t1)
    theta = 2.0 * np.arcsin(min(chord / (2.0 * r), 1.0))
    side_vertex = ex * (oy - y1) - ey * (ox - x1)
    side_center = ex * (py - y1) - ey * (px - x1)
    if side_vertex * side_center > 0.0:
        theta = 2.0 * np.pi - theta
    return ell - 0.5 * r * r * theta_minus_sin(theta)


@njit(cache=True, nogil=True)
def circle_disc_cap(rad, h, r):
    """Disc-cap area for a disc body of radius ``rad`` (two circular segments)."""
    if h <= 0.0:
        return 0.0
    if h >= 2.0 * rad:
        return np.pi * rad * rad
    d = r + h - rad
    ek = h * (2.0 * r + h) / (2.0 * d * rad)
    ed = h * (2.0 * rad - h) / (2.0 * d * r)
    tk = 4.0 * np.arcsin(np.sqrt(min(0.5 * ek, 1.0)))
    td = 4.0 * np.arcsin(np.sqrt(min(0.5 * ed, 1.0)))
    return 0.5 * rad * rad * theta_minus_sin(tk) - 0.5 * r * r * theta_minus_sin(td)


@njit(cache=True, nogil=True)
def linear_cap_many(a, b, t, h):
    out = np.empty(t.size)
    for i in range(t.size):
        out[i] = linear_cap(a, b, t[i], h[i])
    return out


@njit(cache=True, nogil=True)
def disc_cap_many(a, b, t, h, r):
    out = np.empty(t.size)
    for i in range(t.size):
        out[i] = disc_cap(a, b, t[i], h[i], r)
    return out


@njit(cache=True, nogil=True)
def circle_disc_cap_many(rad, h, r):
    out = np.empty(h.size)
    for i in range(h.size):
        out[i] = circle_disc_cap(rad, h[i], r)
    return out
