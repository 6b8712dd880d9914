"""Spindles, circular arcs and r-spindle convex hulls of finite planar point sets.

A disc-polygon is stored as its CCW vertex cycle together with the radius-r
arcs joining consecutive vertices.  Each arc bulges outward, so its center
lies to the left of the directed chord ``vertices[i] -> vertices[i + 1]``
and the polygon equals the intersection of the closed arc discs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateChordError, InvariantError, NotSpindleRepresentableError

EPS_GEOM = 1e-10
DEDUPE_TOL = 1e-12
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Arc:
    """CCW arc of a circle, from ``theta_start`` to ``theta_end`` (radians)."""

    center: Point
    radius: float
    theta_start: float
    theta_end: float

    @property
    def sweep(self) -> float:
        s = (self.theta_end - self.theta_start) % TWO_PI
        if s == 0.0 and self.theta_end != self.theta_start:
            s = TWO_PI
        return s

    def point_at(self, theta: float) -> Point:
        return Point(self.center.x + self.radius * math.cos(theta), self.center.y + self.radius * math.sin(theta))

    def sample(self, count: int) -> np.ndarray:
        """``count`` points evenly spaced along the arc, endpoints included."""
        th = self.theta_start + np.linspace(0.0, self.sweep, count)
        return np.column_stack([self.center.x + self.radius * np.cos(th), self.center.y + self.radius * np.sin(th)])


@dataclass(frozen=True)
class DiscPolygon:
    radius: float
    vertices: tuple[Point, ...] = ()
    arcs: tuple[Arc, ...] = field(default=(), compare=False)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    def vertex_array(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.vertices], dtype=float).reshape(-1, 2)

    def area(self) -> float:
        return area(self)

    def contains(self, q: Point | Sequence[float], eps: float = EPS_GEOM) -> bool:
        return contains(self, q, eps)

    def margin(self, qs: np.ndarray) -> np.ndarray:
        """Signed clearance of each query point (positive inside, length units).

        For two or more vertices this is ``min_i (r - |q - c_i|)`` over the arc
        centers; a point hull reports minus the distance to its point.
        """
        qs = np.atleast_2d(np.asarray(qs, dtype=float))
        if not self.vertices:
            return np.full(len(qs), -np.inf)
        if len(self.vertices) == 1:
            v = self.vertices[0]
            return -np.hypot(qs[:, 0] - v.x, qs[:, 1] - v.y)
        centers = np.array([[a.center.x, a.center.y] for a in self.arcs])
        d = np.hypot(qs[:, None, 0] - centers[None, :, 0], qs[:, None, 1] - centers[None, :, 1])
        return np.min(self.radius - d, axis=1)

    def contains_many(self, qs: np.ndarray, eps: float = EPS_GEOM) -> np.ndarray:
        return self.margin(qs) >= -eps

    def to_record(self) -> dict:
        return {
            "radius": self.radius,
            "vertices": [[p.x, p.y] for p in self.vertices],
            "arcs": [
                {"cx": a.center.x, "cy": a.center.y, "t0": a.theta_start, "t1": a.theta_end}
                for a in self.arcs
            ],
        }


def _as_point(p) -> Point:
    return p if isinstance(p, Point) else Point(float(p[0]), float(p[1]))


def arc_centers(a, b, r: float) -> tuple[Point, Point]:
    """Centers of the two radius-r circles through ``a`` and ``b``.

    The first center lies to the left of the directed segment a -> b.
    """
    a = _as_point(a)
    b = _as_point(b)
    dx = b.x - a.x
    dy = b.y - a.y
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise DegenerateChordError("chord endpoints coincide")
    if d >= 2.0 * r:
        raise DegenerateChordError(f"chord length {d!r} is not below 2r = {2.0 * r!r}")
    h = math.sqrt(max(r * r - 0.25 * d * d, 0.0))
    mx = 0.5 * (a.x + b.x)
    my = 0.5 * (a.y + b.y)
    nx = -dy / d
    ny = dx / d
    return Point(mx + h * nx, my + h * ny), Point(mx - h * nx, my - h * ny)


def _outer_arc(a: Point, b: Point, r: float) -> Arc:
    # center left of a->b; the arc from a to b runs CCW around it
    dx = b.x - a.x
    dy = b.y - a.y
    d = math.hypot(dx, dy)
    h = math.sqrt(max(r * r - 0.25 * d * d, 0.0))
    c = Point(0.5 * (a.x + b.x) - h * dy / d, 0.5 * (a.y + b.y) + h * dx / d)
    t0 = math.atan2(a.y - c.y, a.x - c.x)
    t1 = math.atan2(b.y - c.y, b.x - c.x)
    if t1 <= t0:
        t1 += TWO_PI
    return Arc(c, r, t0, t1)


def _from_vertices(verts: Sequence[Point], r: float) -> DiscPolygon:
    k = len(verts)
    if k <= 1:
        return DiscPolygon(r, tuple(verts), ())
    arcs = tuple(_outer_arc(verts[i], verts[(i + 1) % k], r) for i in range(k))
    return DiscPolygon(r, tuple(verts), arcs)


def spindle(a, b, r: float, eps: float = EPS_GEOM) -> DiscPolygon:
    """The r-spindle of two points: the intersection of all radius-r discs holding both."""
    a = _as_point(a)
    b = _as_point(b)
    d = a.distance(b)
    if d > 2.0 * r + eps:
        raise NotSpindleRepresentableError(f"|a - b| = {d!r} exceeds 2r = {2.0 * r!r}")
    if d <= DEDUPE_TOL:
        return DiscPolygon(r, (a,), ())
    return _from_vertices([a, b], r)


def _coords(points) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([tuple(_as_point(p)) for p in points] if not isinstance(points, np.ndarray) else points, dtype=float)
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def spindle_hull_vertices(xs: np.ndarray, ys: np.ndarray, r: float, eps: float = EPS_GEOM) -> np.ndarray:
    """Indices (CCW) of the spindle hull vertices of the points ``(xs[i], ys[i])``."""
    if xs.size == 0:
        return np.empty(0, dtype=np.int64)
    cand = _kernels.prefilter(xs, ys)
    verts, diam = _kernels.spindle_hull_indices(xs, ys, cand, r, eps, DEDUPE_TOL)
    if diam > 2.0 * r + eps:
        raise NotSpindleRepresentableError(f"point set diameter {diam!r} exceeds 2r = {2.0 * r!r}")
    if not _kernels.arcs_consistent(xs, ys, verts, r, eps):
        raise NotSpindleRepresentableError(f"no radius-{r!r} disc contains all points")
    return verts


def spindle_hull(points, r: float, eps: float = EPS_GEOM) -> DiscPolygon:
    """The r-spindle convex hull of a finite point set.

    The linear hull is computed first (monotone chain); vertices that fall
    inside the spindle of their two neighbours are then eliminated until a
    fixed point is reached.  Points closer than 1e-12 are merged.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    xs, ys = _coords(points)
    verts = spindle_hull_vertices(xs, ys, r, eps)
    return _from_vertices([Point(float(xs[i]), float(ys[i])) for i in verts], r)


def area(p: DiscPolygon) -> float:
    if p.vertex_count < 2:
        return 0.0
    v = p.vertex_array()
    xs = np.ascontiguousarray(v[:, 0])
    ys = np.ascontiguousarray(v[:, 1])
    return float(_kernels.disc_polygon_area(xs, ys, np.arange(len(v)), p.radius))


def shoelace_area(points) -> float:
    """Area of the linear convex hull of ``points``."""
    xs, ys = _coords(points)
    if xs.size < 3:
        return 0.0
    h = _kernels.convex_hull(xs, ys, np.arange(xs.size))
    if h.size < 3:
        return 0.0
    x = xs[h] - xs[h[0]]
    y = ys[h] - ys[h[0]]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def contains(p: DiscPolygon, q, eps: float = EPS_GEOM) -> bool:
    """Closed membership: q lies in the disc of every arc (boundary counts)."""
    q = _as_point(q)
    return bool(p.contains_many(np.array([[q.x, q.y]]), eps)[0])


class CenterRegion:
    """Set of centers of radius-r discs that contain a point set.

    This is the intersection of the radius-r discs around the points.  Its
    boundary consists of arcs of the circles around the points; for each
    point the (single) angular interval of its circle lying in all other
    discs is kept in ``intervals``.
    """

    def __init__(self, points, r: float):
        xs, ys = _coords(points)
        pts = np.column_stack([xs, ys])
        keep: list[np.ndarray] = []
        for p in pts:
            if not any(np.hypot(*(p - q)) <= DEDUPE_TOL for q in keep):
                keep.append(p)
        self.points = np.array(keep).reshape(-1, 2)
        self.r = float(r)
        self.intervals: list[tuple[int, float, float]] = []
        for i, c in enumerate(self.points):
            lo, hi = -math.pi, math.pi
            full = True
            empty = False
            for j, other in enumerate(self.points):
                if j == i:
                    continue
                dx, dy = other - c
                d = math.hypot(dx, dy)
                if d > 2.0 * r * (1.0 + 1e-12):
                    raise NotSpindleRepresentableError(f"pairwise distance {d!r} exceeds 2r = {2.0 * r!r}")
                phi = math.acos(min(d / (2.0 * r), 1.0))
                mid = math.atan2(dy, dx)
                if full:
                    lo, hi = mid - phi, mid + phi
                    full = False
                    continue
                centre = 0.5 * (lo + hi)
                mid += TWO_PI * round((centre - mid) / TWO_PI)
                lo = max(lo, mid - phi)
                hi = min(hi, mid + phi)
                if lo > hi:
                    empty = True
                    break
            if not empty:
                self.intervals.append((i, lo, hi))
        if not self.intervals:
            raise NotSpindleRepresentableError(f"no radius-{r!r} disc contains all points")

    def max_distance(self, qs: np.ndarray) -> np.ndarray:
        """Exact ``max_{p in C} |q - p|`` for each query point."""
        qs = np.atleast_2d(np.asarray(qs, dtype=float))
        best = np.full(len(qs), -np.inf)
        r = self.r
        for i, lo, hi in self.intervals:
            c = self.points[i]
            vx = qs[:, 0] - c[0]
            vy = qs[:, 1] - c[1]
            # farthest circle point from q sits opposite to q as seen from c
            far = np.arctan2(-vy, -vx)
            mid = 0.5 * (lo + hi)
            far = far + TWO_PI * np.round((mid - far) / TWO_PI)
            inside = (far >= lo) & (far <= hi)
            dist_far = np.hypot(vx, vy) + r
            ends = []
            for th in (lo, hi):
                ends.append(np.hypot(qs[:, 0] - (c[0] + r * math.cos(th)), qs[:, 1] - (c[1] + r * math.sin(th))))
            val = np.where(inside, dist_far, np.maximum(ends[0], ends[1]))
            best = np.maximum(best, val)
        return best

    def sampled_max_distance(self, qs: np.ndarray, resolution: int) -> np.ndarray:
        qs = np.atleast_2d(np.asarray(qs, dtype=float))
        best = np.full(len(qs), -np.inf)
        for i, lo, hi in self.intervals:
            c = self.points[i]
            th = np.linspace(lo, hi, max(int(resolution), 2))
            px = c[0] + self.r * np.cos(th)
            py = c[1] + self.r * np.sin(th)
            d = np.hypot(qs[:, None, 0] - px[None, :], qs[:, None, 1] - py[None, :])
            best = np.maximum(best, d.max(axis=1))
        return best

    def boundary_margin(self, qs: np.ndarray, resolution: int = 64) -> np.ndarray:
        """``r - max distance`` (positive inside the hull), cross-checked by sampling."""
        exact = self.max_distance(qs)
        if resolution > 0:
            sampled = self.sampled_max_distance(qs, resolution)
            if np.any(sampled > exact + 1e-9 * max(1.0, self.r)):
                raise InvariantError("sampled center-region distance exceeds analytic maximum")
        return self.r - exact


def hull_membership_oracle(points, r: float, q, resolution: int = 64, eps: float = EPS_GEOM) -> bool:
    """Brute-force membership in the r-spindle hull from its definition.

    ``q`` lies in every radius-r disc containing the points iff its distance
    to every admissible center is at most r, i.e. iff the maximum distance
    from q to the center region does not exceed r.
    """
    q = _as_point(q)
    region = CenterRegion(points, r)
    return bool(region.boundary_margin(np.array([[q.x, q.y]]), resolution)[0] >= -eps)


def hull_membership_oracle_many(points, r: float, qs: np.ndarray, resolution: int = 64, eps: float = EPS_GEOM) -> np.ndarray:
    return CenterRegion(points, r).boundary_margin(qs, resolution) >= -eps


def read_points(lines: Iterable[str]) -> list[Point]:
    """Parse ``x y`` pairs, one per line; blank lines and ``#`` comments are skipped.

    Raises ``ValueError`` naming the 1-based line number of the first bad line.
    """
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two numbers, got {raw.rstrip()!r}")
        try:
            out.append(Point(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out
