"""Caps, floating bodies, wet parts and spindle visibility regions.

Linear caps are cut by a line orthogonal to the outer normal at their
vertex; disc-caps are what remains of K after removing an open radius-r
disc whose center sits at depth ``r + h`` below the vertex.  The minimal
cap area through a point is found by scanning the vertex parameter on a
coarse grid and refining the best local minima by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .bodies import ConvexBody, curvature_summary, require_spindle_regime
from .errors import DomainError
from .geom_core import Point

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

COARSE_GRID = 256
KEEP_MINIMA = 3
GOLDEN_STEPS = 64
FLOATING_DIRECTIONS = 2048
_CHUNK = 2048


@dataclass(frozen=True)
class DiscCap:
    body: ConvexBody
    vertex_param: float
    height: float
    radius: float

    @property
    def vertex(self) -> Point:
        return self.body.boundary_point(self.vertex_param)

    @property
    def center(self) -> Point:
        x, y = self.body.point(self.vertex_param)
        ux, uy = self.body.normal(self.vertex_param)
        s = self.radius + self.height
        return Point(float(x - s * ux), float(y - s * uy))


@dataclass(frozen=True)
class LinearCap:
    body: ConvexBody
    vertex_param: float
    height: float


@dataclass(frozen=True)
class FloatingBodySpec:
    body: ConvexBody
    t: float
    kind: Literal["linear", "spindle"] = "linear"
    r: float | None = None

    def __post_init__(self):
        if not 0 < self.t < self.body.area / 2:
            raise DomainError(f"floating body parameter t={self.t!r} must lie in (0, A(K)/2)")
        if self.kind not in ("linear", "spindle"):
            raise DomainError(f"unknown floating body kind {self.kind!r}")
        if self.kind == "spindle":
            if self.r is None:
                raise DomainError("spindle floating body needs a radius")
            require_spindle_regime(self.body, self.r)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its standard error."""

    value: float
    stderr: float
    samples: int

    def as_record(self, **extra) -> dict:
        return {"estimate": self.value, "stderr": self.stderr, "samples": self.samples, **extra}


# -- single caps ----------------------------------------------------------------


def disc_cap_area(cap: DiscCap) -> float:
    """Area of a disc-cap; raises ``DomainError`` when the cut is not a cap."""
    if cap.height < 0:
        raise DomainError("cap height must be non-negative")
    if cap.height == 0:
        return 0.0
    crossings = cap.body.disc_cut_crossings(cap.vertex_param, cap.height, cap.radius)
    if crossings != 2:
        raise DomainError(f"cutting circle meets the boundary {crossings} times; not a disc-cap")
    return float(cap.body.disc_cap_area(cap.vertex_param, cap.height, cap.radius))


def linear_cap_area(cap: LinearCap) -> float:
    if cap.height < 0:
        raise DomainError("cap height must be non-negative")
    return float(cap.body.linear_cap_area(cap.vertex_param, cap.height))


# -- minimal caps through a point ------------------------------------------------


def _linear_depth(body: ConvexBody, t, px, py):
    x, y = body.point(t)
    ux, uy = body.normal(t)
    return np.maximum((x - px) * ux + (y - py) * uy, 0.0)


def _disc_depth(body: ConvexBody, t, px, py, r):
    # height h of the disc-cap with vertex gamma(t) whose circle passes through (px, py)
    x, y = body.point(t)
    ux, uy = body.normal(t)
    wx = px - x
    wy = py - y
    wu = wx * ux + wy * uy
    tang2 = (wx * uy - wy * ux) ** 2
    root = np.sqrt(np.maximum(r * r - tang2, 0.0))
    return np.maximum(-wu - tang2 / (root + r), 0.0)


def _objective(body: ConvexBody, kind: str, r: float | None):
    if kind == "linear":
        return lambda t, px, py: body.linear_cap_area(t, _linear_depth(body, t, px, py))
    return lambda t, px, py: body.disc_cap_area(t, _disc_depth(body, t, px, py, r), r)


def _minimize_cyclic(f, px, py, grid=COARSE_GRID, keep=KEEP_MINIMA, steps=GOLDEN_STEPS):
    """Per-point minimum over the vertex parameter of ``f(t, px, py)``.

    Returns ``(value, argmin)`` arrays.
    """
    n = px.size
    tg = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    step = TWO_PI / grid
    vals = f(np.tile(tg, n), np.repeat(px, grid), np.repeat(py, grid)).reshape(n, grid)
    is_min = (vals <= np.roll(vals, 1, axis=1)) & (vals <= np.roll(vals, -1, axis=1))
    score = np.where(is_min, vals, np.inf)
    order = np.argsort(score, axis=1, kind="stable")[:, :keep]
    ok = np.isfinite(np.take_along_axis(score, order, axis=1)).ravel()
    cx = np.repeat(px, keep)[ok]
    cy = np.repeat(py, keep)[ok]
    lo = tg[order].ravel()[ok] - step
    hi = lo + 2.0 * step
    a = hi - GOLDEN * (hi - lo)
    b = lo + GOLDEN * (hi - lo)
    fa = f(a, cx, cy)
    fb = f(b, cx, cy)
    for _ in range(steps):
        left = fa < fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        new_b = np.where(left, a, lo + GOLDEN * (hi - lo))
        new_a = np.where(left, hi - GOLDEN * (hi - lo), b)
        # the surviving interior point keeps its value; only the new one is evaluated
        kept = np.where(left, fa, fb)
        a, b = new_a, new_b
        fnew = f(np.where(left, a, b), cx, cy)
        fa = np.where(left, fnew, kept)
        fb = np.where(left, kept, fnew)
    refined_t = np.where(fa < fb, a, b)
    refined_v = np.minimum(fa, fb)
    best_v = vals.min(axis=1)
    best_t = tg[np.argmin(vals, axis=1)]
    owner = np.repeat(np.arange(n), keep)[ok]
    for v, t, i in zip(refined_v, refined_t, owner):
        if v < best_v[i]:
            best_v[i] = v
            best_t[i] = t
    return best_v, np.mod(best_t, TWO_PI)


def _check_inside(body: ConvexBody, px, py):
    inside = body.contains(px, py)
    if not np.all(inside):
        raise DomainError("point lies outside the body")


def min_cap_area_many(body: ConvexBody, pts: np.ndarray, kind: str = "linear", r: float | None = None) -> np.ndarray:
    """Minimal linear (``kind="linear"``) or disc-cap (``kind="spindle"``) area through each point."""
    pts = np.atleast_2d(np.asarray(pts, float))
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    _check_inside(body, px, py)
    f = _objective(body, kind, r)
    out = np.empty(px.size)
    for s in range(0, px.size, _CHUNK):
        out[s : s + _CHUNK] = _minimize_cyclic(f, px[s : s + _CHUNK], py[s : s + _CHUNK])[0]
    return out


def min_cap_area(body: ConvexBody, x) -> float:
    """Minimal area of ``K ∩ H`` over closed half-planes H containing x."""
    x = x if isinstance(x, Point) else Point(*x)
    return float(min_cap_area_many(body, np.array([[x.x, x.y]]))[0])


def min_disc_cap_area(body: ConvexBody, x, r: float) -> float:
    """Minimal disc-cap area over radius-r circles through x."""
    require_spindle_regime(body, r)
    x = x if isinstance(x, Point) else Point(*x)
    return float(min_cap_area_many(body, np.array([[x.x, x.y]]), "spindle", r)[0])


def floating_body_contains(spec: FloatingBodySpec, x) -> bool:
    x = x if isinstance(x, Point) else Point(*x)
    if not spec.body.contains(x.x, x.y):
        return False
    v = min_cap_area_many(spec.body, np.array([[x.x, x.y]]), spec.kind, spec.r)[0]
    return bool(v >= spec.t)


# -- materialised floating bodies ----------------------------------------------


def cap_heights_for_area(body: ConvexBody, params: np.ndarray, t: float, kind: str, r: float | None) -> np.ndarray:
    """Height of the area-``t`` cap at each vertex parameter (bisection in h)."""
    if kind == "linear":
        area = lambda tt, hh: body.linear_cap_area(tt, hh)
    else:
        area = lambda tt, hh: body.disc_cap_area(tt, hh, r)
    x0, y0, x1, y1 = body.bbox
    hi = np.full(params.size, 1e-3 * max(x1 - x0, y1 - y0))
    for _ in range(80):
        short = area(params, hi) < t
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    lo = np.zeros_like(hi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        big = area(params, mid) >= t
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    return 0.5 * (lo + hi)


@dataclass
class FloatingBodyPolygon:
    """Dense polygonal model of a linear or spindle floating body.

    The body is the intersection of the complements of the area-t caps
    at ``directions`` vertex parameters (half-planes for the linear kind,
    radius-r discs for the spindle kind).  Its boundary is sampled along
    ``directions`` rays from the body's center, giving an inscribed convex
    polygon used for fast membership tests.
    """

    spec: FloatingBodySpec
    directions: int = FLOATING_DIRECTIONS
    params: np.ndarray = field(init=False, repr=False)
    heights: np.ndarray = field(init=False, repr=False)
    cut_x: np.ndarray = field(init=False, repr=False)
    cut_y: np.ndarray = field(init=False, repr=False)
    vertices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        spec = self.spec
        body = spec.body
        self.params = np.linspace(0.0, TWO_PI, self.directions, endpoint=False)
        self.heights = cap_heights_for_area(body, self.params, spec.t, spec.kind, spec.r)
        x, y = body.point(self.params)
        ux, uy = body.normal(self.params)
        self._ux = ux
        self._uy = uy
        if spec.kind == "linear":
            # half-plane <y, u> <= <gamma, u> - h
            self.cut_x = x - self.heights * ux
            self.cut_y = y - self.heights * uy
        else:
            s = spec.r + self.heights
            self.cut_x = x - s * ux
            self.cut_y = y - s * uy
        self.origin = np.array(body.center)
        ang = np.linspace(0.0, TWO_PI, self.directions, endpoint=False)
        ex = np.cos(ang)
        ey = np.sin(ang)
        rho = np.empty(self.directions)
        for s0 in range(0, self.directions, 256):
            sl = slice(s0, s0 + 256)
            rho[sl] = self._exit_distance(ex[sl], ey[sl])
        self.vertices = np.column_stack([self.origin[0] + rho * ex, self.origin[1] + rho * ey])
        self._rho = rho

    def _exit_distance(self, ex, ey):
        ox, oy = self.origin
        if self.spec.kind == "linear":
            c = (self.cut_x - ox) * self._ux + (self.cut_y - oy) * self._uy
            if np.any(c <= 0):
                raise DomainError("floating body parameter too large: center is cut off")
            den = ex[:, None] * self._ux[None, :] + ey[:, None] * self._uy[None, :]
            with np.errstate(divide="ignore"):
                d = np.where(den > 0, c[None, :] / den, np.inf)
            return d.min(axis=1)
        r = self.spec.r
        qx = self.cut_x - ox
        qy = self.cut_y - oy
        if np.any(qx * qx + qy * qy >= r * r):
            raise DomainError("floating body parameter too large: center is cut off")
        proj = ex[:, None] * qx[None, :] + ey[:, None] * qy[None, :]
        d = proj + np.sqrt(proj * proj - (qx * qx + qy * qy)[None, :] + r * r)
        return d.min(axis=1)

    def signed_inside(self, x, y) -> np.ndarray:
        """Positive inside the polygon: cross product against the sector edge."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ox, oy = self.origin
        n = self.directions
        ang = np.mod(np.arctan2(y - oy, x - ox), TWO_PI)
        k = np.minimum((ang / (TWO_PI / n)).astype(np.int64), n - 1)
        v0 = self.vertices[k]
        v1 = self.vertices[(k + 1) % n]
        ex = v1[..., 0] - v0[..., 0]
        ey = v1[..., 1] - v0[..., 1]
        el = np.hypot(ex, ey)
        return (ex * (y - v0[..., 1]) - ey * (x - v0[..., 0])) / el

    def contains(self, x, y, tol: float = 1e-12) -> np.ndarray:
        return self.signed_inside(x, y) >= -tol

    def interior(self, x, y, tol: float = 1e-12) -> np.ndarray:
        return self.signed_inside(x, y) > tol

    def area(self) -> float:
        v = self.vertices - self.origin
        return 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))


def wet_part_area(spec: FloatingBodySpec, samples: int, rng: np.random.Generator, polygon: FloatingBodyPolygon | None = None) -> Estimate:
    """Monte Carlo area of ``K`` minus the floating body, with standard error."""
    from .bodies import sample_uniform

    poly = polygon if polygon is not None else FloatingBodyPolygon(spec)
    body = spec.body
    hits = 0
    done = 0
    while done < samples:
        m = min(200_000, samples - done)
        pts = sample_uniform(body, rng, m)
        hits += int(np.count_nonzero(~poly.contains(pts[:, 0], pts[:, 1])))
        done += m
    f = hits / samples
    area = body.area
    return Estimate(area * f, area * math.sqrt(f * (1.0 - f) / samples), samples)


# -- inclusion and visibility checks -------------------------------------------


@dataclass(frozen=True)
class SandwichReport:
    t: float
    r: float
    probes: int
    violations: int
    function_violations: int
    c0: float
    considered: int

    def as_record(self) -> dict:
        return {
            "t": self.t,
            "r": self.r,
            "probes": self.probes,
            "violations": self.violations,
            "function_violations": self.function_violations,
            "c0": self.c0,
            "considered": self.considered,
        }


def boundary_band_probes(body: ConvexBody, depth: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points ``gamma(s) - delta * u(s)`` with s and delta uniform (delta in [0, depth])."""
    s = rng.uniform(0.0, TWO_PI, count)
    delta = rng.uniform(0.0, depth, count)
    x, y = body.point(s)
    ux, uy = body.normal(s)
    return np.column_stack([x - delta * ux, y - delta * uy])


def sandwich_check(body: ConvexBody, t: float, r: float, probes: int, rng: np.random.Generator, rel_tol: float = 1e-9) -> SandwichReport:
    """Probe the inclusions between linear and spindle floating bodies.

    Counts probes with ``v(x) >= t`` but ``v_r(x) < t`` (first inclusion
    violated) and probes where ``v_r(x) < v(x)`` (function-level inequality
    violated).  The empirical ``c0`` is the smallest ``v(x)/t`` over probes
    with ``v_r(x) >= t``.
    """
    require_spindle_regime(body, r)
    params = np.linspace(0.0, TWO_PI, 256, endpoint=False)
    depth = 3.0 * float(np.max(cap_heights_for_area(body, params, t, "linear", None)))
    pts = boundary_band_probes(body, depth, probes, rng)
    v = min_cap_area_many(body, pts, "linear")
    vr = min_cap_area_many(body, pts, "spindle", r)
    thr = t * (1.0 - rel_tol)
    violations = int(np.count_nonzero((v >= t) & (vr < thr)))
    fviol = int(np.count_nonzero(vr < v * (1.0 - rel_tol)))
    sel = vr >= t
    c0 = float(np.min(v[sel]) / t) if sel.any() else float("nan")
    return SandwichReport(t, r, probes, violations, fviol, c0, int(sel.sum()))


def _arc_points(x: np.ndarray, zx: float, zy: float, r: float, count: int, which: int) -> np.ndarray:
    """Interior sample points of a shorter radius-r arc from each x to z.

    ``which`` selects the circle whose center lies left (0) or right (1)
    of the directed chord x -> z.  Returns an array ``(len(x), count, 2)``.
    """
    dx = zx - x[:, 0]
    dy = zy - x[:, 1]
    d = np.hypot(dx, dy)
    d = np.where(d == 0, 1e-300, d)
    h = np.sqrt(np.maximum(r * r - 0.25 * d * d, 0.0))
    sgn = 1.0 if which == 0 else -1.0
    cx = 0.5 * (x[:, 0] + zx) - sgn * h * dy / d
    cy = 0.5 * (x[:, 1] + zy) + sgn * h * dx / d
    a0 = np.arctan2(x[:, 1] - cy, x[:, 0] - cx)
    a1 = np.arctan2(zy - cy, zx - cx)
    sweep = np.mod(a1 - a0 + math.pi, TWO_PI) - math.pi
    s = (np.arange(1, count + 1) / (count + 1))[None, :]
    ang = a0[:, None] + s * sweep[:, None]
    return np.stack([cx[:, None] + r * np.cos(ang), cy[:, None] + r * np.sin(ang)], axis=-1)


def visibility_box(poly: FloatingBodyPolygon, z_param: float, margin: float = 1.25, grid: int = 8192):
    """Sampling window around z covering every area-t disc-cap that contains z.

    Returns ``(origin, tangent, normal, (lmin, lmax, depth))`` in the local
    frame at z (normal pointing inward).
    """
    body = poly.spec.body
    r = poly.spec.r
    zx, zy = body.point(z_param)
    ux, uy = body.normal(z_param)
    tx, ty = -uy, ux
    holds_z = (zx - poly.cut_x) ** 2 + (zy - poly.cut_y) ** 2 >= r * r
    tau = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    bx, by = body.point(tau)
    mark = np.zeros(grid, bool)
    for j in np.nonzero(holds_z)[0]:
        mark |= (bx - poly.cut_x[j]) ** 2 + (by - poly.cut_y[j]) ** 2 > r * r
    mark |= np.roll(mark, 1) | np.roll(mark, -1)
    lx = (bx[mark] - zx) * tx + (by[mark] - zy) * ty
    ly = -((bx[mark] - zx) * ux + (by[mark] - zy) * uy)
    lmin, lmax = float(lx.min()), float(lx.max())
    mid = 0.5 * (lmin + lmax)
    half = 0.5 * (lmax - lmin) * margin
    return (zx, zy), (tx, ty), (-ux, -uy), (mid - half, mid + half, float(ly.max()) * margin)


def visibility_area(
    body: ConvexBody,
    z_param: float,
    t: float,
    r: float,
    samples: int,
    rng: np.random.Generator,
    polygon: FloatingBodyPolygon | None = None,
    arc_points: int = 128,
    margin: float = 1.25,
) -> Estimate:
    """Monte Carlo area of the spindle visibility region of ``z = gamma(z_param)``.

    Samples uniform points in a window around z that covers all area-t
    disc-caps containing z, keeps those in the spindle wet part, and
    accepts a point when at least one of the two shorter radius-r arcs to
    z avoids the interior of the spindle floating body.
    """
    poly = polygon if polygon is not None else FloatingBodyPolygon(FloatingBodySpec(body, t, "spindle", r))
    (zx, zy), (tx, ty), (nx, ny), (lmin, lmax, depth) = visibility_box(poly, z_param, margin)
    box_area = (lmax - lmin) * depth
    hits = 0
    done = 0
    while done < samples:
        m = min(20_000, samples - done)
        u = rng.random((m, 2))
        a = lmin + (lmax - lmin) * u[:, 0]
        b = depth * u[:, 1]
        x = np.column_stack([zx + a * tx + b * nx, zy + a * ty + b * ny])
        cand = body.contains(x[:, 0], x[:, 1]) & ~poly.contains(x[:, 0], x[:, 1])
        xs = x[cand]
        seen = np.zeros(len(xs), bool)
        for which in (0, 1):
            arc = _arc_points(xs, zx, zy, r, arc_points, which)
            blocked = poly.interior(arc[..., 0], arc[..., 1]).any(axis=1)
            seen |= ~blocked
        hits += int(seen.sum())
        done += m
    f = hits / samples
    return Estimate(box_area * f, box_area * math.sqrt(f * (1.0 - f) / samples), samples)


def cap_area_ratio(body: ConvexBody, vertex_param: float, h: float, r: float) -> tuple[float, float]:
    """``A(D(x0, h)) h^(-3/2)`` and its small-h limit ``(4/3) sqrt(2 / (kappa(x0) - 1/r))``."""
    kappa = float(body.curvature(vertex_param))
    if not kappa > 1.0 / r:
        raise DomainError("curvature at the vertex must exceed 1/r")
    val = disc_cap_area(DiscCap(body, vertex_param, h, r)) * h ** -1.5
    return val, 4.0 / 3.0 * math.sqrt(2.0 / (kappa - 1.0 / r))


# -- batch report -------------------------------------------------------------------


@dataclass(frozen=True)
class CapsSettings:
    """What the caps report checks and how hard it samples."""

    t_values: tuple[float, ...] = (1e-3, 1e-4)
    probes: int = 10_000
    visibility_t: tuple[float, ...] = (1e-3, 3e-4, 1e-4)
    visibility_samples: int = 200_000
    z_count: int = 8
    wet_samples: int = 200_000
    h: float = 1e-4

    def __post_init__(self):
        if min(self.probes, self.visibility_samples, self.wet_samples, self.z_count) < 1:
            raise DomainError("sample counts must be positive")
        if not self.h > 0:
            raise DomainError("cap height must be positive")


def caps_report(body: ConvexBody, r: float, settings: CapsSettings, master_seed: int) -> dict:
    """Cap-limit, sandwich, wet-part and visibility records for one body."""
    from .rng import STREAM_CAPS, stream

    require_spindle_regime(body, r)
    summ = curvature_summary(body)
    out: dict = {"r": r, "r_M": summ.r_M}
    limits = []
    for k, vp in enumerate((0.0, 0.5 * math.pi)):
        val, lim = cap_area_ratio(body, vp, settings.h, r)
        limits.append({"vertex_param": vp, "h": settings.h, "ratio": val, "limit": lim, "rel_error": abs(val / lim - 1.0)})
    out["cap_limit"] = limits
    out["sandwich"] = [
        sandwich_check(body, t, r, settings.probes, stream(master_seed, STREAM_CAPS, 0, k)).as_record()
        for k, t in enumerate(settings.t_values)
    ]
    wet = []
    for k, t in enumerate(settings.t_values):
        for j, kind in enumerate(("linear", "spindle")):
            spec = FloatingBodySpec(body, t, kind, r if kind == "spindle" else None)
            est = wet_part_area(spec, settings.wet_samples, stream(master_seed, STREAM_CAPS, 1, k, j))
            wet.append(est.as_record(t=t, kind=kind, violations=0))
    out["wet_part"] = wet
    vis = []
    for k, t in enumerate(settings.visibility_t):
        poly = FloatingBodyPolygon(FloatingBodySpec(body, t, "spindle", r))
        for j in range(settings.z_count):
            z = TWO_PI * j / settings.z_count
            est = visibility_area(body, z, t, r, settings.visibility_samples, stream(master_seed, STREAM_CAPS, 2, k, j), polygon=poly)
            vis.append(est.as_record(t=t, z_param=z, ratio=est.value / t, violations=0))
    out["visibility"] = vis
    return out
