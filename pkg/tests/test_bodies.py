from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special
from scipy import stats as sps

from spindlelab.bodies import (
    Disc,
    Ellipse,
    body_from_spec,
    boundary_integral,
    contains,
    curvature_summary,
    expected_area_constant,
    make_ellipse,
    make_unit_disc,
    quad_tolerance,
    require_spindle_regime,
    sample_uniform,
)
from spindlelab.errors import DomainError
from spindlelab.geom_core import Point

GAMMA_53 = special.gamma(5.0 / 3.0)
BODIES = [make_unit_disc(), make_ellipse(2.0, 1.0), make_ellipse(3.0, 1.0), Disc(0.5)]


def test_gamma_five_thirds():
    assert GAMMA_53 == pytest.approx(0.9027452929509336, rel=1e-13)


class TestConstruction:
    def test_unit_disc(self):
        d = make_unit_disc()
        assert d.area == pytest.approx(math.pi, rel=1e-12)
        assert np.allclose(d.curvature(np.linspace(0, 6, 7)), 1.0)

    @pytest.mark.parametrize("a,b", [(0, 1), (-1, 1), (1, 2)])
    def test_bad_axes(self, a, b):
        with pytest.raises(DomainError):
            make_ellipse(a, b)

    def test_ellipse_reduces_to_disc(self):
        e = make_ellipse(1.0, 1.0)
        assert np.allclose(e.curvature(np.linspace(0, 6, 13)), 1.0)

    def test_ellipse_curvature_closed_form(self):
        e = make_ellipse(2.0, 1.0)
        assert float(e.curvature(0.0)) == pytest.approx(2.0)
        assert float(e.curvature(math.pi / 2)) == pytest.approx(0.25)

    def test_curvature_by_turning_angle(self):
        # finite differences of the tangent angle per arc length
        e = make_ellipse(2.0, 1.0)
        t = np.linspace(0.1, 6.0, 25)
        h = 1e-5
        ang = lambda s: np.unwrap(np.arctan2(*e.derivative(s)[::-1]))
        num = (ang(t + h) - ang(t - h)) / (2 * h) / e.speed(t)
        assert np.allclose(num, e.curvature(t), rtol=1e-6)

    def test_spec_roundtrip(self):
        assert isinstance(body_from_spec({"kind": "disc"}), Disc)
        e = body_from_spec({"kind": "ellipse", "a": 2, "b": 1})
        assert isinstance(e, Ellipse) and (e.a, e.b) == (2.0, 1.0)
        with pytest.raises(DomainError):
            body_from_spec({"kind": "square"})
        with pytest.raises(DomainError):
            body_from_spec({"kind": "ellipse", "a": 2})


@pytest.mark.parametrize("body", BODIES, ids=repr)
def test_area_matches_pi_ab(body):
    a, b = (body.a, body.b)
    assert body.area == pytest.approx(math.pi * a * b, rel=1e-8)


@pytest.mark.parametrize("body", BODIES, ids=repr)
def test_turning_number(body):
    val, _ = integrate.quad(lambda t: body.curvature(t) * body.speed(t), 0, 2 * math.pi, epsabs=0, epsrel=1e-10, limit=200)
    assert val == pytest.approx(2 * math.pi, abs=1e-6)


@pytest.mark.parametrize("body", BODIES, ids=repr)
def test_containment_shrink_expand(body):
    t = np.linspace(0, 2 * math.pi, 200, endpoint=False)
    x, y = body.point(t)
    assert body.contains(0.999 * x, 0.999 * y).all()
    assert not body.contains(1.001 * x, 1.001 * y).any()
    assert contains(body, Point(0.0, 0.0))


class TestCurvatureSummary:
    def test_disc(self):
        s = curvature_summary(make_unit_disc())
        assert (s.kappa_min, s.kappa_max, s.r_M, s.r_m) == pytest.approx((1, 1, 1, 1))

    def test_ellipse_2_1(self):
        s = curvature_summary(make_ellipse(2, 1))
        assert s.kappa_min == pytest.approx(0.25, rel=1e-10)
        assert s.kappa_max == pytest.approx(2.0, rel=1e-10)
        assert s.r_M == pytest.approx(4.0, rel=1e-10)

    def test_ellipse_3_1(self):
        assert curvature_summary(make_ellipse(3, 1)).r_M == pytest.approx(9.0, rel=1e-10)

    def test_regime(self):
        with pytest.raises(DomainError, match="r_M"):
            require_spindle_regime(make_unit_disc(), 1.0)
        require_spindle_regime(make_unit_disc(), 1.0 + 1e-9)


class TestConstant:
    def test_disc_integral_closed_form(self):
        assert boundary_integral(make_unit_disc(), 2.0) == pytest.approx(2 * math.pi * 0.5 ** (1 / 3), rel=1e-10)

    def test_disc_constant_closed_form(self):
        expected = (2 * math.pi**2 / 3) ** (1 / 3) * GAMMA_53 * 2 * math.pi * 0.5 ** (1 / 3)
        assert expected_area_constant(make_unit_disc(), 2.0) == pytest.approx(expected, rel=1e-10)
        assert expected == pytest.approx(8.436026420263916, rel=1e-12)

    def test_large_r_limit(self):
        limit = (2 * math.pi**2 / 3) ** (1 / 3) * GAMMA_53 * 2 * math.pi
        assert expected_area_constant(make_unit_disc(), 1e12) == pytest.approx(limit, rel=1e-9)

    def test_ellipse_quadrature_converged(self):
        e = make_ellipse(2, 1)
        assert boundary_integral(e, 5.0, tol=1e-8) == pytest.approx(boundary_integral(e, 5.0, tol=1e-12), rel=1e-6)

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_scaling(self, lam):
        # A^(2/3) carries lam^(4/3); the integral carries lam^(2/3)
        base = expected_area_constant(make_ellipse(2, 1), 5.0)
        scaled = expected_area_constant(make_ellipse(2 * lam, lam), 5.0 * lam)
        assert scaled / base == pytest.approx(lam**2, rel=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            expected_area_constant(make_ellipse(2, 1), 4.0)

    def test_env_tolerance(self, monkeypatch):
        monkeypatch.setenv("SPINDLELAB_QUAD_TOL", "1e-6")
        assert quad_tolerance() == 1e-6
        monkeypatch.setenv("SPINDLELAB_QUAD_TOL", "zero")
        with pytest.raises(DomainError):
            quad_tolerance()


class TestSampling:
    def test_disc_mean_and_quarter(self):
        pts = sample_uniform(make_unit_disc(), np.random.default_rng(0), 1_000_000)
        se = math.sqrt(0.25 / 1e6)
        assert abs(pts[:, 0].mean()) < 3 * se and abs(pts[:, 1].mean()) < 3 * se
        f = (np.hypot(pts[:, 0], pts[:, 1]) < 0.5).mean()
        assert abs(f - 0.25) < 3 * math.sqrt(0.25 * 0.75 / 1e6)

    def test_ellipse_area_by_acceptance(self):
        e = make_ellipse(2, 1)
        rng = np.random.default_rng(1)
        u = rng.random((1_000_000, 2))
        x0, y0, x1, y1 = e.bbox
        inside = e.contains(x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]).mean()
        assert inside * (x1 - x0) * (y1 - y0) == pytest.approx(2 * math.pi, rel=2e-3)

    def test_chi_square_grid(self):
        e = make_ellipse(2, 1)
        pts = sample_uniform(e, np.random.default_rng(2), 1_000_000)
        # 10x10 grid over the bbox; expected counts from the exact cell areas
        edges_x = np.linspace(-2, 2, 11)
        edges_y = np.linspace(-1, 1, 11)
        counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], [edges_x, edges_y])
        g = np.linspace(0, 1, 401)[:-1] + 1 / 800
        areas = np.zeros((10, 10))
        for i in range(10):
            for j in range(10):
                xs = edges_x[i] + 0.4 * g
                ys = edges_y[j] + 0.2 * g
                X, Y = np.meshgrid(xs, ys)
                areas[i, j] = e.contains(X, Y).mean() * 0.08
        expected = areas / areas.sum() * 1_000_000
        keep = expected > 50
        stat = float(((counts[keep] - expected[keep]) ** 2 / expected[keep]).sum())
        dof = int(keep.sum()) - 1
        assert sps.chi2.sf(stat, dof) > 1e-3

    def test_single_point_and_determinism(self):
        p = sample_uniform(make_unit_disc(), np.random.default_rng(3))
        assert isinstance(p, Point)
        a = sample_uniform(make_unit_disc(), np.random.default_rng(9), 50)
        b = sample_uniform(make_unit_disc(), np.random.default_rng(9), 50)
        assert np.array_equal(a, b)
