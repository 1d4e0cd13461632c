import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brenier_bounds import (DomainError, EXT_INF, EXT_ZERO, ExtParam, ExtReal,
                            INF, InvalidOrder, PotentialSpec, VoidBound,
                            bound_from_terms, ext_min, finite_global_sharp_bound,
                            finite_growth_constants, gamma, global_bound,
                            growth_data, local_bound, local_factors,
                            mglob_uniformity_check, tail_mass)


def quad(a, n=1):
    return PotentialSpec.quadratic(a, n)


class TestGamma:
    def test_cases(self):
        assert gamma(1, 2).as_float() == 0.0          # 2d - D = 0
        assert gamma(2, 3).as_float() == 1.0          # (4-3)/(3-2)
        assert gamma(3, 4).as_float() == 2.0
        assert gamma(1, 3).as_float() == 0.0          # negative part clipped
        assert not gamma(2, 2).is_finite              # equal finite parameters
        assert gamma(1, INF).as_float() == 0.0

    def test_rejects_inverted_order(self):
        with pytest.raises(InvalidOrder):
            gamma(3, 2)

    def test_nonincreasing_in_D(self):
        d = 3.0
        vals = [gamma(d, D) for D in (3.0, 4.0, 5.0, 10.0)]
        assert not vals[0].is_finite
        floats = [v.as_float() for v in vals[1:]] + [gamma(d, INF).as_float()]
        assert all(b <= a for a, b in zip(floats, floats[1:]))


class TestExtReal:
    def test_min_and_times_conventions(self):
        assert ext_min(ExtReal(2.0), EXT_INF).value == 2.0
        assert ext_min(EXT_INF, ExtReal(3.0)).value == 3.0
        assert EXT_INF.times(5.0) == EXT_INF
        assert ExtReal(2.0).times(3.0).value == 6.0

    def test_bound_assembly(self):
        b = bound_from_terms(3.0, ExtReal(1.0))
        assert b.value == pytest.approx(3.0)  # sqrt(4) + sqrt(1)
        assert not bound_from_terms(1.0, EXT_INF).is_finite

    @given(st.floats(0.0, 1e8), st.floats(0.0, 1e8), st.floats(1e-12, 1e8))
    def test_increasing_in_b(self, a, b, delta):
        lo = bound_from_terms(a, ExtReal(b))
        hi = bound_from_terms(a, ExtReal(b + delta))
        assert hi.value >= lo.value


class TestTailMass:
    def test_zero_radius_is_exactly_one(self, quad1):
        assert tail_mass(quad1, ExtParam.finite(1), 0.0) == 1.0

    def test_gaussian_and_cauchy_closed_forms(self, quad1):
        assert tail_mass(quad1, INF, 1.0) == pytest.approx(math.erfc(1.0), rel=1e-9)
        assert tail_mass(quad1, ExtParam.finite(1), 2.0) == pytest.approx(
            1.0 - 2.0 / math.pi * math.atan(2.0), rel=1e-9)

    def test_decreasing_in_radius(self, quad1):
        D = ExtParam.finite(2)
        vals = [tail_mass(quad1, D, r) for r in (0.0, 0.5, 1.0, 5.0, 50.0)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestGrowthData:
    def test_cauchy_anchor_values(self, quad1):
        gd = growth_data(quad1, quad1, 1.0, ExtParam.finite(1), 1.0, 1)
        m_want = 6.0 / (101.0 * math.pi)
        assert gd.s == 1.0
        assert gd.m_frak == pytest.approx(m_want, rel=1e-9)
        fathi_want = 3.0 * math.tan(math.pi / 2.0 * (1.0 - m_want))
        assert gd.fathi_radius == pytest.approx(fathi_want, rel=1e-7)
        assert gd.growth_factor == pytest.approx(1.0 + gd.fathi_radius ** 2, rel=1e-12)

    def test_rejects_infinite_source_parameter_and_radius(self, quad1):
        with pytest.raises(DomainError):
            growth_data(quad1, quad1, math.inf, ExtParam.finite(2), 1.0, 1)
        with pytest.raises(ValueError):
            growth_data(quad1, quad1, 1.0, ExtParam.finite(2), math.inf, 1)

    def test_fathi_radius_nondecreasing_in_R(self, quad1):
        D = ExtParam.finite(2)
        vals = [growth_data(quad1, quad1, 1.0, D, R, 1).fathi_radius
                for R in (1.0, 2.0, 4.0, 8.0)]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


class TestLocalBound:
    def test_caffarelli_regime_is_the_sharp_ratio(self, quad1, quad_quarter):
        rep = local_bound(quad1, quad_quarter, 1, INF, INF, 1.0)
        assert rep.regime == "caffarelli"
        assert rep.bound.as_float() == math.sqrt(2.0 / 0.5) == 2.0
        assert rep.B is EXT_ZERO or rep.B.as_float() == 0.0

    def test_endpoint_regime_formula(self, quad1):
        rep = local_bound(quad(0.5), quad1, 1, ExtParam.finite(2), INF, 3.0)
        assert rep.regime == "endpoint_poly_log"
        c0 = rep.constants["c0_V"]
        assert rep.bound.as_float() == pytest.approx(
            math.sqrt(1.0 / (2.0 * c0)), rel=1e-12)

    def test_local_regime_uses_growth_factors(self, quad1):
        rep = local_bound(quad1, quad1, 1, ExtParam.finite(1), ExtParam.finite(1), 1.0)
        assert rep.regime == "local"
        assert rep.constants["xi"] > 0.0  # gamma = +inf picks the first branch
        assert rep.bound.as_float() > 1.0

    def test_void_without_declared_hessian_bounds(self, quad1):
        r = np.linspace(0.0, 30.0, 3000)
        W = PotentialSpec.tabulated(r, r ** 2, du=2.0 * r, dimension=1)
        with pytest.raises(VoidBound):
            local_bound(quad1, W, 1, INF, INF, 1.0)

    def test_xi_zero_once_target_parameter_doubles_source(self, quad1):
        lam, xi = local_factors(quad1, quad1, 1.0, ExtParam.finite(2), 1.0, 1)
        assert xi == 0.0 and lam >= 1.0


class TestGlobalBounds:
    def test_global_bound_frozen_value(self, quad1):
        rep = global_bound(quad1, quad1, 1, ExtParam.finite(1), ExtParam.finite(1))
        # sqrt(1e6 * 2 / 2 * ... ) = sqrt(33e6) + sqrt(32e6) with unit aggregates
        assert rep.A == pytest.approx(1e6, rel=1e-12)
        assert rep.B.as_float() == pytest.approx(3.2e7, rel=1e-12)
        assert rep.bound.as_float() == pytest.approx(11401.416896030409, rel=1e-12)

    def test_independent_of_the_tail_parameters(self, quad1):
        b1 = global_bound(quad1, quad1, 1, ExtParam.finite(1), ExtParam.finite(1))
        b2 = global_bound(quad1, quad1, 1, ExtParam.finite(7), INF)
        assert b1.bound.as_float() == b2.bound.as_float()

    def test_growth_constants_unit_case(self, quad1):
        k, m = finite_growth_constants(quad1, quad1, 1, 1, 1)
        assert k == pytest.approx(125.0, rel=1e-12)
        assert m == pytest.approx(15625.0, rel=1e-12)

    def test_sharp_bound_unit_case(self, quad1):
        rep = finite_global_sharp_bound(quad1, quad1, 1, 1, 1)
        assert rep.A == pytest.approx(15626.0, rel=1e-12)
        assert rep.B.as_float() == pytest.approx(16.0 * 15626.0, rel=1e-12)
        assert rep.bound.as_float() == pytest.approx(
            math.sqrt(15626.0 + 250016.0) + math.sqrt(250016.0), rel=1e-12)

    def test_growth_constants_no_overflow_at_large_d(self, quad1):
        k, m = finite_growth_constants(quad1, quad1, 1, 300, 300)
        assert math.isfinite(k) and math.isfinite(m)

    def test_order_violations(self, quad1):
        with pytest.raises(DomainError):
            finite_growth_constants(quad1, quad1, 1, 3, 2)
        with pytest.raises(InvalidOrder):
            global_bound(quad1, quad1, 1, ExtParam.finite(3), ExtParam.finite(2))


class TestUniformity:
    def test_small_grid_every_step(self):
        rep = mglob_uniformity_check([1, 2], range(1, 11), range(1, 11))
        assert rep.all_pass
        assert rep.e2_product == pytest.approx(125000.0 * math.e ** 2)
        assert rep.e2_product < 924000.0
        assert rep.tau_endpoint_value == pytest.approx(math.log(15625.0), abs=1e-9)
        assert rep.max_one_plus_m <= 1e6
        assert all(r["pass"] for r in rep.rows)
