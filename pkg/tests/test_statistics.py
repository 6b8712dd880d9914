from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst
from scipy import special

from spindlelab import _kernels
from spindlelab import statistics as st
from spindlelab.bodies import make_unit_disc, sample_uniform
from spindlelab.errors import ConfigError, DomainError
from spindlelab.geom_core import shoelace_area, spindle_hull
from spindlelab.rng import replicate_stream, stream

DISC = make_unit_disc()
DISC_SPEC = {"kind": "disc", "radius": 1.0}


def cfg(**kw):
    base = dict(body=DISC_SPEC, r=2.0, n_values=(50, 100), replicates=20, master_seed=5)
    base.update(kw)
    return st.ExperimentConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            cfg(n_values=(1,))
        with pytest.raises(ConfigError):
            cfg(replicates=1)
        with pytest.raises(ConfigError):
            cfg(estimators={"bogus"})
        with pytest.raises(ConfigError):
            cfg(n_values=())
        with pytest.raises(DomainError):
            cfg(r=1.0)

    def test_from_mapping(self):
        c = st.ExperimentConfig.from_mapping(
            {"body": DISC_SPEC, "r": 2, "n_values": [10], "replicates": 3, "master_seed": 1}
        )
        assert c.n_values == (10,) and c.estimators == frozenset(st.ESTIMATORS)
        with pytest.raises(ConfigError):
            st.ExperimentConfig.from_mapping({"r": 2})
        assert st.ExperimentConfig.from_mapping(c.as_mapping()).digest == c.digest


class TestSimulation:
    def test_repeatable(self):
        a = st.simulate_once(DISC, 2.0, 200, replicate_stream(1, 200, 0))
        b = st.simulate_once(DISC, 2.0, 200, replicate_stream(1, 200, 0))
        assert a == b

    def test_two_points(self):
        area, count = st.simulate_once(DISC, 2.0, 2, stream(3, 0))
        assert count == 2 and 0 < area <= DISC.area

    def test_matches_public_hull_and_bounds(self):
        for k in range(20):
            pts = sample_uniform(DISC, replicate_stream(9, 300, k), 300)
            area, count = st.simulate_once(DISC, 2.0, 300, replicate_stream(9, 300, k))
            poly = spindle_hull(pts, 2.0)
            assert area == poly.area() and count == poly.vertex_count
            assert shoelace_area(pts) <= area <= DISC.area

    def test_large_n_band(self):
        # A(K) - c n^(-2/3) within a factor (1 +- 0.5) of the missed-area leading term
        n = 10_000
        c = 8.436026420263916
        area, _ = st.simulate_once(DISC, 2.0, n, stream(11, 0))
        missed = DISC.area - area
        assert 0.5 * c * n ** (-2 / 3) < missed < 1.5 * c * n ** (-2 / 3)

    def test_threads_do_not_change_results(self):
        a = st.area_replicates(DISC, 2.0, 80, 600, 3, threads=1)
        b = st.area_replicates(DISC, 2.0, 80, 600, 3, threads=4)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestSummaries:
    def test_two_replicates(self):
        s = st.SampleSummary.from_replicates(10, np.array([1.0, 3.0]), np.array([3, 5]))
        assert (s.mean, s.variance, s.stderr_mean, s.mean_vertex_count) == (2.0, 2.0, 1.0, 4.0)

    def test_standardized_exact(self):
        rng = np.random.default_rng(0)
        z = st.StandardizedSample.from_values(5, 3.0 + 1e-4 * rng.standard_normal(10_000)).values
        assert abs(math.fsum(z) / z.size) < 1e-12
        assert abs(math.fsum(z * z) / (z.size - 1) - 1) < 1e-12

    def test_constant_sample(self):
        with pytest.raises(DomainError):
            st.StandardizedSample.from_values(5, [1.0, 1.0, 1.0])

    def test_exact_power_law(self):
        ns = [100, 200, 400, 800, 1600, 3200]
        fit = st.fit_power_law(ns, [n ** (-5 / 3) for n in ns])
        assert fit.exponent == pytest.approx(-5 / 3, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_fit(self):
        with pytest.raises(DomainError):
            st.fit_power_law([10, 10], [1.0, 2.0])


class TestWasserstein:
    def test_point_mass(self):
        assert st.wasserstein_to_normal(np.zeros(50)) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-12)

    def test_quantile_grid(self):
        m = 10_000
        q = special.ndtri((np.arange(1, m + 1) - 0.5) / m)
        assert st.wasserstein_to_normal(q) < 1e-3

    def test_shift(self):
        # W1 between N(0,1) and N(mu,1) is |mu|
        m = 20_000
        q = special.ndtri((np.arange(1, m + 1) - 0.5) / m)
        assert st.wasserstein_to_normal(q + 0.3) == pytest.approx(0.3, abs=2e-3)

    @settings(max_examples=25, deadline=None)
    @given(hst.lists(hst.floats(-5, 5), min_size=10, max_size=60), hst.randoms())
    def test_permutation_invariant(self, values, rnd):
        perm = values[:]
        rnd.shuffle(perm)
        assert st.wasserstein_to_normal(np.array(values)) == st.wasserstein_to_normal(np.array(perm))

    def test_non_finite(self):
        with pytest.raises(DomainError):
            st.wasserstein_to_normal(np.array([0.0, np.nan]))

    def test_normal_input_statistics(self):
        z = np.random.default_rng(1).standard_normal(20_000)
        rep = st.normality_report(10, z, 20, np.random.default_rng(2))
        assert rep.d_w < 0.03 and rep.ks < 0.02 and abs(rep.skew) < 0.1 and abs(rep.kurt) < 0.15
        assert rep.d_w_se > 0


class TestDifferences:
    def points(self, seed, n):
        return sample_uniform(DISC, np.random.default_rng(seed), n)

    def test_interior_point_zero(self):
        pts = np.vstack([self.points(0, 30), [[0.0, 0.0]]])
        assert st.first_difference(pts, 30, 2.0) == 0.0

    def test_first_difference_nonnegative(self):
        pts = self.points(1, 25)
        assert all(st.first_difference(pts, i, 2.0) >= 0 for i in range(25))

    def test_second_symmetric_and_four_hull(self):
        pts = self.points(2, 12)
        for i, j in [(0, 1), (3, 7), (2, 11)]:
            assert st.second_difference(pts, i, j, 2.0) == st.second_difference(pts, j, i, 2.0)
            idx = np.arange(12)
            A = lambda keep: spindle_hull(pts[keep], 2.0).area()
            ref = A(idx) - A(idx != i) - A(idx != j) + A((idx != i) & (idx != j))
            assert st.second_difference(pts, i, j, 2.0) == pytest.approx(ref, abs=1e-12)

    def test_errors(self):
        pts = self.points(3, 5)
        with pytest.raises(IndexError):
            st.first_difference(pts, 5, 2.0)
        with pytest.raises(IndexError):
            st.second_difference(pts, 1, 1, 2.0)
        with pytest.raises(DomainError):
            st.second_difference(pts[:2], 0, 1, 2.0)

    @pytest.mark.parametrize("n", [6, 30, 120])
    def test_fast_kernel_matches_brute_force(self, n):
        rng = np.random.default_rng(n)
        for _ in range(5):
            pts = sample_uniform(DISC, rng, n)
            xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
            tol = 1e-14 * DISC.area
            fast = _kernels.difference_stats(xs, ys, 2.0, 1e-10, tol, False)
            slow = _kernels.difference_stats(xs, ys, 2.0, 1e-10, tol, True)
            assert fast[0] == slow[0] and fast[1] == slow[1] and fast[3] == slow[3]
            assert np.allclose(fast[2], slow[2], rtol=1e-9, atol=1e-18)

    def test_kernel_matches_public_ops(self):
        pts = self.points(4, 9)
        xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
        _, _, s, pairs = _kernels.difference_stats(xs, ys, 2.0, 1e-10, 1e-14 * math.pi, True)
        d = [st.first_difference(pts, i, 2.0) for i in range(9)]
        assert s[2] == pytest.approx(sum(x**3 for x in d), rel=1e-9)
        ref = sum(abs(st.second_difference(pts, i, j, 2.0)) > 1e-14 * math.pi for i, j in combinations(range(9), 2))
        assert pairs == ref

    def test_three_points_interact(self):
        d = st.difference_moments(DISC, 2.0, 3, 200, 8)
        assert d.p_interact > 0.95

    def test_seed_independence_n3(self):
        a = st.estimate_B34(DISC, 2.0, 3, 4000, 1)
        b = st.estimate_B34(DISC, 2.0, 3, 4000, 2)
        assert abs(a.b3 - b.b3) < 3 * math.hypot(a.b3_se, b.b3_se)
        assert abs(a.b4 - b.b4) < 3 * math.hypot(a.b4_se, b.b4_se)

    def test_interaction_decreases(self):
        p1, _ = st.interaction_probability(DISC, 2.0, 20, 300, 3)
        p2, _ = st.interaction_probability(DISC, 2.0, 200, 300, 3)
        assert p2 < p1


class TestExperiment:
    def test_csv_layout(self):
        res = st.run_experiment(cfg(bootstrap=5))
        lines = res.to_csv().splitlines()
        assert lines[0].split(",") == list(st.CSV_COLUMNS)
        assert len(lines) == 3
        row = dict(zip(st.CSV_COLUMNS, lines[1].split(",")))
        assert row["seed"] == "5" and row["config_hash"] == cfg(bootstrap=5).digest
        assert all(row[c] != "" for c in st.CSV_COLUMNS)

    def test_partial_estimators_leave_blank(self):
        res = st.run_experiment(cfg(estimators={"expectation"}))
        row = dict(zip(st.CSV_COLUMNS, res.to_csv().splitlines()[1].split(",")))
        assert row["d_w"] == "" and row["b3"] == "" and row["rescaled_mean"] != ""

    def test_expectation_rows(self):
        rows = st.run_expectation(cfg(replicates=50))
        assert rows[0].constant == pytest.approx(8.436026420263916)
        assert all(r.rescaled_stderr > 0 for r in rows)

    def test_vertex_count_growth(self):
        c = cfg(n_values=(100, 400, 1600), replicates=100, estimators={"expectation"})
        res = st.run_expectation(c)
        fit = st.fit_power_law([r.summary.n for r in res], [r.summary.mean_vertex_count for r in res])
        assert 0.25 <= fit.exponent <= 0.42

    def test_normal_bound_report(self):
        rep = st.normal_bound_report(cfg(n_values=(50, 100, 200), diffops_replicates=40))
        recs = rep.as_records()
        assert recs[0]["b1"] == "not estimated"
        assert all(r["n_b3"] > 0 and r["sqrt_n_b4"] > 0 for r in recs)
        assert rep.n_b3_fit is not None

    def test_clt_keep_samples(self):
        reports, samples = st.run_clt(cfg(bootstrap=0), keep_samples=True)
        assert len(reports) == len(samples) == 2
        assert math.isnan(reports[0].d_w_se)
