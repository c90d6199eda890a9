import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionkdv.scaling import (
    FINITE_TIME, GLOBAL, Fields, ScalingParams, check_regime, delta_from_nu, from_lab_frame,
    lab_grid_for, scaled_coordinates, to_lab_frame,
)
from ionkdv.spectral import make_grid


class TestDelta:
    @pytest.mark.parametrize("eps,nu,delta", [(0.01, 1e-7, 1.0), (0.25, 0.25, 0.25**2.5), (0.5, 1.0, 0.5**3.5)])
    def test_examples(self, eps, nu, delta):
        assert delta_from_nu(eps, nu) == pytest.approx(delta, rel=1e-13)

    def test_tiny_values_stay_finite(self):
        # eps^(7/2) underflows on its own; the log form does not
        assert delta_from_nu(1e-100, 1e-300) == pytest.approx(1e-50, rel=1e-10)

    @given(st.floats(1e-6, 0.9), st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_decreasing_in_nu(self, eps, a, b):
        lo, hi = sorted((a, b))
        assert delta_from_nu(eps, hi) <= delta_from_nu(eps, lo)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            delta_from_nu(0.0, 1.0)


class TestParams:
    def test_from_beta_keeps_exponent(self):
        p = ScalingParams.from_beta(0.1, 1.5)
        assert p.beta == 1.5
        assert p.nu == pytest.approx(0.1**1.5)
        assert p.delta == pytest.approx(0.1**2.0)
        assert p.epsdelta == pytest.approx(0.1**3.0)

    @pytest.mark.parametrize("kw", [dict(epsilon=1.0, nu=0.1), dict(epsilon=0.1, nu=0.0),
                                    dict(epsilon=0.1, nu=0.1, c0=0.5), dict(epsilon=0.1, nu=0.1, c1=0.0)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            ScalingParams(**kw)

    def test_as_dict(self):
        d = ScalingParams(0.1, 0.01).as_dict()
        assert d["beta"] == pytest.approx(2.0)
        assert set(d) == {"epsilon", "nu", "beta", "delta", "epsdelta", "c0", "c1"}


class TestRegime:
    def test_inside_finite_time_band(self):
        r = check_regime(ScalingParams.from_beta(0.01, 1.0), FINITE_TIME)
        assert r.in_band and r.boundary is None
        assert r.lower_margin > 0 and r.upper_margin > 0

    def test_outside(self):
        assert not check_regime(ScalingParams.from_beta(0.01, 2.0), FINITE_TIME).in_band
        assert not check_regime(ScalingParams.from_beta(0.01, 4.0), GLOBAL).in_band

    @pytest.mark.parametrize("beta,which", [(0.5, FINITE_TIME), (1.5, FINITE_TIME), (2.5, GLOBAL), (3.0, GLOBAL)])
    def test_endpoint_exponents(self, beta, which):
        # eps = 0.05 keeps the endpoints apart from the c1 alternatives
        r = check_regime(ScalingParams.from_beta(0.05, beta), which)
        assert r.in_band
        assert r.boundary == f"beta = {beta:g}"

    def test_c1_alternatives(self):
        eps, c1 = 0.01, 0.01
        r = check_regime(ScalingParams(eps, c1 * eps**0.5, c1=c1), FINITE_TIME)
        assert r.in_band and r.boundary == "nu = c1 eps^0.5"
        r = check_regime(ScalingParams(eps, eps**3 / c1, c1=c1), GLOBAL)
        assert r.in_band and r.boundary == "nu = eps^3 / c1"

    def test_coarse_case_hits_boundary(self):
        # eps = 0.1, nu = eps: eps^3 / c1 = 0.1 exactly
        r = check_regime(ScalingParams.from_beta(0.1, 1.0), GLOBAL)
        assert r.in_band and r.boundary == "nu = eps^3 / c1"

    def test_global_band_empty_for_large_c0(self):
        r = check_regime(ScalingParams.from_beta(0.01, 2.75, c0=0.3), GLOBAL)
        assert r.band_empty and not r.in_band
        assert not check_regime(ScalingParams.from_beta(0.01, 2.75, c0=0.25), GLOBAL).band_empty

    def test_unknown_band(self):
        with pytest.raises(ValueError):
            check_regime(ScalingParams(0.1, 0.1), "local")

    @given(st.floats(0.55, 1.45))
    @settings(max_examples=40, deadline=None)
    def test_interior_exponents(self, beta):
        # c0 = 0.25 opens [0.75, 1.25]; the rest of (1/2, 3/2) is outside
        r = check_regime(ScalingParams.from_beta(0.01, beta), FINITE_TIME)
        assert r.in_band == (0.75 <= beta <= 1.25)


class TestFrames:
    @pytest.fixture
    def setup(self):
        g = make_grid(40 * math.pi, 512)
        x = g.x - g.length / 2
        f = Fields(1.0 + 0.1 / np.cosh(0.5 * x) ** 2, 0.3 / np.cosh(0.5 * x) ** 2,
                   1.5 + 0.1 / np.cosh(0.5 * x) ** 2, 0.2 / np.cosh(0.5 * x) ** 2)
        return g, f

    def test_scaled_coordinates(self):
        ts, xs = scaled_coordinates(0.04, 10.0, np.array([10.0, 35.0]))
        assert ts == pytest.approx(0.08)
        np.testing.assert_allclose(xs, [0.0, 5.0])

    def test_round_trip(self, setup):
        g, f = setup
        eps, t = 0.05, 3.0
        lg = lab_grid_for(g, eps)
        lab = to_lab_frame(g, f, eps, t, lg.x)
        back = from_lab_frame(lg, lab, eps, t, g)
        for a, b in zip(back, f):
            assert np.max(np.abs(a - b)) <= 1e-10

    def test_unit_epsilon_at_time_zero_is_identity_up_to_scaling(self, setup):
        g, f = setup
        lab = to_lab_frame(g, f, 0.999999999999, 0.0, g.x)
        for a, b in zip(lab, f):
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)

    def test_equilibrium_maps_to_lab_equilibrium(self):
        g = make_grid(10.0, 16)
        n = g.n
        eps = 0.1
        f = Fields(np.ones(n), np.zeros(n), np.full(n, 1.5), np.zeros(n))
        lab = to_lab_frame(g, f, eps, 2.0, np.linspace(0, 5, 7))
        np.testing.assert_allclose(lab.rho, 1.0)
        np.testing.assert_allclose(lab.u, 0.0, atol=1e-15)
        np.testing.assert_allclose(lab.theta, 1.5 * eps**2)
        np.testing.assert_allclose(lab.phi, 0.0, atol=1e-15)

    def test_period_mismatch(self, setup):
        g, f = setup
        with pytest.raises(ValueError):
            from_lab_frame(g, f, 0.05, 0.0, g)
