import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brenier_bounds import (EmptyWindow, ExtParam, INF, PotentialSpec,
                            RadialMap, default_grid, lipschitz_empirical,
                            quantile_map_1d, radial_map, second_variation_check,
                            slope_fit)
from brenier_bounds.transport import TailTable


def quad(a, n=1):
    return PotentialSpec.quadratic(a, n)


class TestTailTable:
    def test_cauchy_closed_form_and_deep_inversion(self, quad1):
        t = TailTable(quad1, ExtParam.finite(1), 1)
        assert t.total == pytest.approx(math.pi / 2, rel=1e-10)
        for r in (1.0, 1e4, 1e7):
            assert t.tail(r) == pytest.approx(math.pi / 2 - math.atan(r), rel=1e-8)
        for target in (1e-9, 1e-15, 1e-19):
            assert t.invert(target) == pytest.approx(1.0 / math.tan(target), rel=1e-8)

    def test_gaussian_closed_form(self, quad1):
        t = TailTable(quad1, INF, 1)
        assert t.total == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)
        assert t.tail(1.5) == pytest.approx(
            math.sqrt(math.pi) / 2 * math.erfc(1.5), rel=1e-9)

    def test_invert_at_full_mass_returns_origin(self, quad1):
        t = TailTable(quad1, INF, 1)
        assert t.invert(t.total) == 0.0


class TestRadialMap:
    def test_identity(self, quad1):
        m = radial_map(quad1, quad1, ExtParam.finite(2), ExtParam.finite(2), 1)
        assert np.max(np.abs(m.t / m.r_grid - 1.0)) < 1e-10
        assert np.max(np.abs(m.residuals)) < 1e-10

    def test_gaussian_scaling_is_linear(self, quad1, quad_quarter):
        m = radial_map(quad1, quad_quarter, INF, INF, 1)
        assert np.max(np.abs(m.t / (2.0 * m.r_grid) - 1.0)) < 1e-10
        assert np.max(np.abs(m.t_prime - 2.0)) < 1e-10

    def test_monotonicity_is_validated(self):
        r = np.array([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            RadialMap(r, np.array([1.0, 0.5, 2.0]), np.ones(3), 1, np.zeros(3))
        with pytest.raises(ValueError):
            RadialMap(r, r.copy(), np.array([1.0, -1.0, 1.0]), 1, np.zeros(3))

    def test_default_grid_spans_the_documented_window(self):
        g = default_grid(ExtParam.finite(4), points=100)
        assert g[0] == pytest.approx(1e-3 * 2.0)
        assert g[-1] == pytest.approx(50.0 * 2.0)
        assert len(g) == 100

    def test_csv_roundtrip(self, tmp_path, quad1):
        m = radial_map(quad1, quad1, ExtParam.finite(1), ExtParam.finite(1), 1)
        path = tmp_path / "map.csv"
        m.write_csv(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["r", "t", "t_prime", "residual"]
        assert len(rows) == len(m.r_grid) + 1
        assert float(rows[1][0]) == m.r_grid[0]
        assert float(rows[-1][1]) == m.t[-1]


class TestQuantileOracle:
    def test_matches_radial_map_on_even_potentials(self, quad1):
        x = np.logspace(math.log10(0.01), math.log10(20.0), 60)
        for d, D in [(ExtParam.finite(1), ExtParam.finite(1)), (INF, INF),
                     (ExtParam.finite(2), ExtParam.finite(4))]:
            a = radial_map(quad1, quad(0.5), d, D, 1, x)
            b = quantile_map_1d(quad1, quad(0.5), d, D, x)
            assert np.max(np.abs(a.t / b.t - 1.0)) < 1e-7

    def test_shifted_potential_translates(self):
        V = PotentialSpec.one_dim(lambda x: (x - 1.0) ** 2,
                                  lambda x: 2.0 * (x - 1.0),
                                  hess_upper=2.0, hess_lower=2.0)
        W = quad(1.0)
        x = np.linspace(-3.0, 5.0, 41)
        m = quantile_map_1d(V, W, ExtParam.finite(1), ExtParam.finite(1), x)
        assert np.max(np.abs(m.t - (x - 1.0))) < 1e-8
        assert np.max(np.abs(m.t_prime - 1.0)) < 1e-8


class TestLipschitz:
    def test_window_restriction(self, quad1):
        g = np.logspace(1.5, 4.2, 200)
        m = radial_map(quad1, quad1, ExtParam.finite(3), ExtParam.finite(1), 1, g)
        small = lipschitz_empirical(m, 10 ** 1.5)
        large = lipschitz_empirical(m, 1e3)
        assert large.value / small.value >= 50.0
        assert large.argmax_r <= 1e3

    def test_empty_window(self, quad1):
        m = radial_map(quad1, quad1, ExtParam.finite(1), ExtParam.finite(1), 1)
        with pytest.raises(EmptyWindow):
            lipschitz_empirical(m, m.r_grid[0] / 2.0)

    def test_tangential_component_in_higher_dimension(self):
        V = quad(1.0, 2)
        g = np.logspace(1.5, 4.2, 200)
        m = radial_map(V, V, ExtParam.finite(4), ExtParam.finite(2), 2, g)
        est = lipschitz_empirical(m, math.inf)
        assert est.value > 1.0
        assert est.component in ("radial", "tangential")


class TestSlopes:
    @pytest.mark.parametrize("n,d,D,want", [(1, 2, 1, 3.0), (1, 3, 1, 5.0),
                                            (2, 4, 2, 3.0)])
    def test_counterexample_exponents(self, n, d, D, want):
        V = quad(1.0, n)
        g = np.logspace(1.5, 4.2, 300)
        m = radial_map(V, V, ExtParam.finite(d), ExtParam.finite(D), n, g)
        slope, r2 = slope_fit(m, 1e2, 1e4)
        assert slope == pytest.approx(want, abs=0.05)
        assert r2 > 0.999

    def test_scale_invariance_in_t(self, quad1):
        m = radial_map(quad1, quad1, ExtParam.finite(1), ExtParam.finite(1), 1)
        scaled = RadialMap(m.r_grid, 7.0 * m.t, 7.0 * m.t_prime, 1, m.residuals)
        s1, _ = slope_fit(m, 0.01, 10.0)
        s2, _ = slope_fit(scaled, 0.01, 10.0)
        assert s2 == pytest.approx(s1, abs=1e-12)

    def test_needs_enough_points(self, quad1):
        m = radial_map(quad1, quad1, ExtParam.finite(1), ExtParam.finite(1), 1)
        with pytest.raises(EmptyWindow):
            slope_fit(m, 49.0, 50.0)


class TestSecondVariation:
    def test_identity_has_positive_slack(self, quad1):
        d = ExtParam.finite(1)
        m = radial_map(quad1, quad1, d, d, 1)
        rep = second_variation_check(m, quad1, quad1, d, d, math.inf)
        assert rep.min_slack > 0.0
        assert {e.epsilon for e in rep.entries} == {0.1, 0.5, 0.9}

    def test_caffarelli_endpoint_is_tight(self, quad1, quad_quarter):
        m = radial_map(quad1, quad_quarter, INF, INF, 1)
        rep = second_variation_check(m, quad1, quad_quarter, INF, INF, math.inf)
        assert len(rep.entries) == 1
        assert rep.entries[0].inequality == "endpoint"
        assert abs(rep.min_slack) < 1e-6  # equality case of the sharp constant

    def test_poly_to_log_concave_endpoint(self, quad1):
        d = ExtParam.finite(2)
        m = radial_map(quad1, quad1, d, INF, 1)
        rep = second_variation_check(m, quad1, quad1, d, INF, 10.0)
        assert rep.min_slack >= -1e-6
