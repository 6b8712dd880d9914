"""Smooth convex discs with positive curvature: geometry, constants, sampling.

Bodies are parameterised by an angle-like parameter ``t`` in ``[0, 2*pi)``
running counter-clockwise.  A body supplies its boundary curve and first
two derivatives; curvature, normals, arc length and the generic cap
routines are derived from those.  The disc and the ellipse override the
cap routines with closed forms.
"""

from __future__ import annotations

import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from . import _capkernels
from ._kernels import theta_minus_sin
from .errors import DomainError
from .geom_core import Point

TWO_PI = 2.0 * math.pi
DEFAULT_QUAD_TOL = 1e-8


def quad_tolerance() -> float:
    """Relative quadrature tolerance (env ``SPINDLELAB_QUAD_TOL`` overrides)."""
    raw = os.environ.get("SPINDLELAB_QUAD_TOL")
    if raw is None:
        return DEFAULT_QUAD_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise DomainError(f"SPINDLELAB_QUAD_TOL must be a number, got {raw!r}") from None
    if not tol > 0:
        raise DomainError("SPINDLELAB_QUAD_TOL must be positive")
    return tol


@dataclass(frozen=True)
class CurvatureSummary:
    kappa_min: float
    kappa_max: float

    @property
    def r_M(self) -> float:
        return 1.0 / self.kappa_min

    @property
    def r_m(self) -> float:
        return 1.0 / self.kappa_max


class ConvexBody(ABC):
    """A convex disc whose boundary is C^2 with strictly positive curvature."""

    kind = "generic"

    @abstractmethod
    def point(self, t):
        """Boundary point(s) ``(x, y)`` at parameter ``t``."""

    @abstractmethod
    def derivative(self, t):
        ...

    @abstractmethod
    def second_derivative(self, t):
        ...

    @property
    @abstractmethod
    def bbox(self) -> tuple[float, float, float, float]:
        """``(xmin, ymin, xmax, ymax)``."""

    @abstractmethod
    def contains(self, x, y):
        """Closed membership test, vectorised over coordinate arrays."""

    @property
    def center(self) -> tuple[float, float]:
        """An interior reference point."""
        t = np.linspace(0.0, TWO_PI, 512, endpoint=False)
        x, y = self.point(t)
        return float(np.mean(x)), float(np.mean(y))

    @property
    def area(self) -> float:
        def integrand(t):
            x, y = self.point(t)
            dx, dy = self.derivative(t)
            return 0.5 * (x * dy - y * dx)

        val, _ = integrate.quad(integrand, 0.0, TWO_PI, epsabs=0.0, epsrel=quad_tolerance(), limit=500)
        return val

    def to_spec(self) -> dict:
        raise NotImplementedError

    def speed(self, t):
        dx, dy = self.derivative(t)
        return np.hypot(dx, dy)

    def curvature(self, t):
        dx, dy = self.derivative(t)
        ddx, ddy = self.second_derivative(t)
        return (dx * ddy - dy * ddx) / np.hypot(dx, dy) ** 3

    def normal(self, t):
        """Outer unit normal at parameter ``t``."""
        dx, dy = self.derivative(t)
        s = np.hypot(dx, dy)
        return dy / s, -dx / s

    def boundary_point(self, t) -> Point:
        x, y = self.point(float(t))
        return Point(float(x), float(y))

    def perimeter(self) -> float:
        val, _ = integrate.quad(self.speed, 0.0, TWO_PI, epsabs=0.0, epsrel=quad_tolerance(), limit=500)
        return val

    # -- caps -----------------------------------------------------------------

    def linear_cap_area(self, t, h):
        """Area of ``K ∩ {<y, u> >= <x0, u> - h}`` for vertex ``x0 = gamma(t)``, vectorised."""
        return np.vectorize(self._linear_cap_scalar, otypes=[float])(t, h)

    def disc_cap_area(self, t, h, r):
        """Area of ``K \\ open disc(x0 - (r + h) u, r)`` for vertex ``x0 = gamma(t)``, vectorised."""
        return np.vectorize(lambda tt, hh: self._disc_cap_scalar(tt, hh, r), otypes=[float])(t, h)

    def disc_cut_crossings(self, t: float, h: float, r: float, grid: int = 4096) -> int:
        """Number of sign changes of ``|gamma - p|^2 - r^2`` along the boundary."""
        p = self._cap_center(t, h, r)
        tau = np.linspace(0.0, TWO_PI, grid, endpoint=False)
        x, y = self.point(tau)
        g = (x - p[0]) ** 2 + (y - p[1]) ** 2 - r * r
        s = np.sign(g)
        return int(np.count_nonzero(s != np.roll(s, 1)))

    def _cap_center(self, t, h, r):
        x, y = self.point(t)
        ux, uy = self.normal(t)
        return x - (r + h) * ux, y - (r + h) * uy

    def _crossing_params(self, f, t):
        # roots of f on either side of t, where f(t) > 0 and f < 0 somewhere else
        grid = t + np.linspace(0.0, TWO_PI, 513)[1:-1]
        vals = np.array([f(g) for g in grid])
        neg = np.nonzero(vals < 0.0)[0]
        if neg.size == 0:
            return None
        fwd = grid[neg[0]]
        prev_f = t if neg[0] == 0 else grid[neg[0] - 1]
        bwd = grid[neg[-1]] - TWO_PI
        next_b = t if neg[-1] == grid.size - 1 else grid[neg[-1] + 1] - TWO_PI
        t2 = optimize.brentq(f, prev_f, fwd, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        t1 = optimize.brentq(f, bwd, next_b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return t1, t2

    def _arc_segment_area(self, t1, t2):
        # area between the boundary arc t1..t2 and its chord (Green, origin at gamma(t1))
        x1, y1 = self.point(t1)

        def integrand(tau):
            x, y = self.point(tau)
            dx, dy = self.derivative(tau)
            return 0.5 * ((x - x1) * dy - (y - y1) * dx)

        val, _ = integrate.quad(integrand, t1, t2, epsabs=0.0, epsrel=quad_tolerance(), limit=500)
        return val

    def _linear_cap_scalar(self, t, h):
        if h <= 0.0:
            return 0.0
        x0, y0 = self.point(t)
        ux, uy = self.normal(t)
        s = x0 * ux + y0 * uy - h

        def f(tau):
            x, y = self.point(tau)
            return x * ux + y * uy - s

        roots = self._crossing_params(f, t)
        if roots is None:
            return self.area
        return self._arc_segment_area(*roots)

    def _disc_cap_scalar(self, t, h, r):
        if h <= 0.0:
            return 0.0
        px, py = self._cap_center(t, h, r)

        def g(tau):
            x, y = self.point(tau)
            return (x - px) ** 2 + (y - py) ** 2 - r * r

        roots = self._crossing_params(g, t)
        if roots is None:
            return self.area
        t1, t2 = roots
        x1, y1 = self.point(t1)
        x2, y2 = self.point(t2)
        x0, y0 = self.point(t)
        ex, ey = x2 - x1, y2 - y1
        theta = 2.0 * math.asin(min(math.hypot(ex, ey) / (2.0 * r), 1.0))
        if (ex * (y0 - y1) - ey * (x0 - x1)) * (ex * (py - y1) - ey * (px - x1)) > 0.0:
            theta = TWO_PI - theta
        return self._arc_segment_area(t1, t2) - 0.5 * r * r * theta_minus_sin(theta)


class Ellipse(ConvexBody):
    """Axis-aligned ellipse ``(a cos t, b sin t)`` centred at the origin."""

    kind = "ellipse"

    def __init__(self, a: float, b: float):
        if not (a > 0 and b > 0):
            raise DomainError(f"ellipse axes must be positive, got a={a!r}, b={b!r}")
        self.a = float(a)
        self.b = float(b)

    def __repr__(self):
        return f"{type(self).__name__}(a={self.a!r}, b={self.b!r})"

    def point(self, t):
        return self.a * np.cos(t), self.b * np.sin(t)

    def derivative(self, t):
        return -self.a * np.sin(t), self.b * np.cos(t)

    def second_derivative(self, t):
        return -self.a * np.cos(t), -self.b * np.sin(t)

    def curvature(self, t):
        a, b = self.a, self.b
        return a * b / (a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2) ** 1.5

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    @property
    def bbox(self):
        return (-self.a, -self.b, self.a, self.b)

    @property
    def center(self):
        return (0.0, 0.0)

    def contains(self, x, y):
        return (np.asarray(x) / self.a) ** 2 + (np.asarray(y) / self.b) ** 2 <= 1.0

    def to_spec(self) -> dict:
        return {"kind": "ellipse", "a": self.a, "b": self.b}

    def linear_cap_area(self, t, h):
        t, h = np.broadcast_arrays(np.asarray(t, float), np.asarray(h, float))
        out = _capkernels.linear_cap_many(self.a, self.b, t.ravel().copy(), h.ravel().copy())
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def disc_cap_area(self, t, h, r):
        t, h = np.broadcast_arrays(np.asarray(t, float), np.asarray(h, float))
        out = _capkernels.disc_cap_many(self.a, self.b, t.ravel().copy(), h.ravel().copy(), float(r))
        return out.reshape(t.shape) if t.ndim else float(out[0])


class Disc(Ellipse):
    """Disc of radius ``radius`` centred at the origin."""

    kind = "disc"

    def __init__(self, radius: float = 1.0):
        super().__init__(radius, radius)
        self.radius = float(radius)

    def __repr__(self):
        return f"Disc(radius={self.radius!r})"

    def curvature(self, t):
        return np.full_like(np.asarray(t, float), 1.0 / self.radius) if np.ndim(t) else 1.0 / self.radius

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return x * x + y * y <= self.radius * self.radius

    def to_spec(self) -> dict:
        return {"kind": "disc", "radius": self.radius}

    def disc_cap_area(self, t, h, r):
        t, h = np.broadcast_arrays(np.asarray(t, float), np.asarray(h, float))
        out = _capkernels.circle_disc_cap_many(self.radius, h.ravel().copy(), float(r))
        return out.reshape(t.shape) if t.ndim else float(out[0])


def make_unit_disc() -> Disc:
    return Disc(1.0)


def make_ellipse(a: float, b: float) -> Ellipse:
    if not (a > 0 and b > 0):
        raise DomainError(f"ellipse axes must be positive, got a={a!r}, b={b!r}")
    if a < b:
        raise DomainError(f"ellipse requires a >= b, got a={a!r}, b={b!r}")
    return Ellipse(a, b)


def body_from_spec(spec: dict) -> ConvexBody:
    """Build a body from ``{"kind": "disc", "radius": ...}`` or ``{"kind": "ellipse", "a": ..., "b": ...}``."""
    kind = spec.get("kind")
    if kind == "disc":
        return Disc(float(spec.get("radius", 1.0)))
    if kind == "ellipse":
        try:
            return make_ellipse(float(spec["a"]), float(spec["b"]))
        except KeyError as exc:
            raise DomainError(f"ellipse spec is missing {exc.args[0]!r}") from None
    raise DomainError(f"unknown body kind {kind!r}")


def curvature_summary(body: ConvexBody, grid: int = 4096) -> CurvatureSummary:
    """Extreme boundary curvatures: dense grid, then bounded local refinement."""
    t = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    k = np.asarray(body.curvature(t), float)
    step = TWO_PI / grid

    def refine(i, sign):
        res = optimize.minimize_scalar(
            lambda s: sign * float(body.curvature(s)),
            bounds=(t[i] - step, t[i] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return sign * min(res.fun, sign * k[i])

    kmin = refine(int(np.argmin(k)), 1.0)
    kmax = refine(int(np.argmax(k)), -1.0)
    return CurvatureSummary(kappa_min=float(kmin), kappa_max=float(kmax))


def require_spindle_regime(body: ConvexBody, r: float) -> CurvatureSummary:
    """Raise ``DomainError`` unless ``r > r_M``."""
    summ = curvature_summary(body)
    if not r > summ.r_M:
        raise DomainError(f"radius r={r!r} must exceed r_M={summ.r_M!r}")
    return summ


def boundary_integral(body: ConvexBody, r: float, tol: float | None = None) -> float:
    """Arc-length integral of ``(kappa - 1/r)^(1/3)`` over the boundary."""
    require_spindle_regime(body, r)
    tol = quad_tolerance() if tol is None else tol

    def integrand(t):
        return np.cbrt(body.curvature(t) - 1.0 / r) * body.speed(t)

    val, _ = integrate.quad(integrand, 0.0, TWO_PI, epsabs=0.0, epsrel=tol, limit=1000)
    return float(val)


def expected_area_constant(body: ConvexBody, r: float) -> float:
    """Limit of ``E[A(K \\ K_n^r)] n^(2/3)`` as n grows."""
    return float(np.cbrt(2.0 * body.area ** 2 / 3.0) * special.gamma(5.0 / 3.0) * boundary_integral(body, r))


def sample_uniform(body: ConvexBody, rng: np.random.Generator, n: int | None = None):
    """Uniform point(s) in ``body`` by rejection from its bounding box.

    Returns a ``Point`` when ``n`` is None, else an ``(n, 2)`` array.  Draws
    happen in fixed-size batches so the output is a deterministic function
    of the generator state.
    """
    if n is None:
        return Point(*map(float, sample_uniform(body, rng, 1)[0]))
    x0, y0, x1, y1 = body.bbox
    accept = body.area / ((x1 - x0) * (y1 - y0))
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        need = n - filled
        m = int(need / accept * 1.1) + 16
        u = rng.random((m, 2))
        x = x0 + (x1 - x0) * u[:, 0]
        y = y0 + (y1 - y0) * u[:, 1]
        ok = np.nonzero(body.contains(x, y))[0][:need]
        out[filled : filled + ok.size, 0] = x[ok]
        out[filled : filled + ok.size, 1] = y[ok]
        filled += ok.size
    return out


def contains(body: ConvexBody, p) -> bool:
    x, y = (p.x, p.y) if isinstance(p, Point) else p
    return bool(body.contains(x, y))
