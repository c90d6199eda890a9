import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionkdv.fluid import TransportCoeffs
from ionkdv.hierarchy import solve_hierarchy
from ionkdv.profile import (
    InadmissibleProfile, ProfileTrajectory, ResidualNorms, assemble, build_profile,
    build_profile_trajectory, ep_defects, profile_residual_ep, profile_residual_nsp, viscous_terms,
)
from ionkdv.spectral import make_grid


@pytest.fixture(scope="module")
def small():
    g = make_grid(2 * math.pi, 32)
    return g


def _constant_trajectory(g, rho=1.0, u=0.0, theta=1.5, phi=0.0, nt=6, eps=0.1):
    full = lambda v: np.full((nt, g.n), v)  # noqa: E731
    return ProfileTrajectory(g, eps, 0.01, np.arange(nt) * 0.01, full(rho), full(u), full(theta), full(phi))


class TestAssemble:
    def test_example(self):
        assert assemble(1.0, 2.0, 3.0, 4.0, 0.5) == pytest.approx(1 + 1 + 0.75 + 0.5)

    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(1e-3, 0.5))
    @settings(max_examples=50, deadline=None)
    def test_matches_polynomial(self, cs, eps):
        assert assemble(*cs, eps) == pytest.approx(np.polynomial.polynomial.polyval(eps, cs), abs=1e-12)


class TestBuildProfile:
    def test_zero_corrections_give_equilibrium(self):
        g = make_grid(20.0, 32)
        tr = solve_hierarchy(g, np.zeros(g.n), 0.05, 0.01)
        p = build_profile(tr.at(0), 0.1)
        np.testing.assert_array_equal(p.rho_bar, 1.0)
        np.testing.assert_array_equal(p.u1_bar, 0.0)
        np.testing.assert_array_equal(p.theta_bar, 1.5)
        np.testing.assert_array_equal(p.phi_bar, 0.0)
        res = profile_residual_ep(build_profile_trajectory(tr, 0.1))
        assert max(res) == 0.0

    def test_leading_order(self, soliton_corrections):
        cs = soliton_corrections.at(0)
        g = cs.grid
        ratios = []
        for eps in (0.1, 0.05, 0.025):
            p = build_profile(cs, eps)
            assert g.l2(p.phi_bar - cs.U0) <= 2 * eps * g.l2(cs.phi1)
            ratios.append(g.l2(p.rho_bar - 1.0 - eps * cs.U0) / eps**2)
        # (rho_bar - 1 - eps U0) / eps^2 tends to |rho2|
        assert ratios[-1] == pytest.approx(g.l2(cs.rho2), rel=0.1)
        assert max(ratios) / min(ratios) < 1.3

    def test_inadmissible_epsilon(self, soliton_corrections):
        cs = soliton_corrections.at(0)
        with pytest.raises(InadmissibleProfile, match="theta_bar"):
            build_profile(cs, 0.6)
        with pytest.raises(ValueError):
            build_profile(cs, 0.0)
        with pytest.raises(InadmissibleProfile):
            build_profile_trajectory(soliton_corrections, 0.6)

    def test_trajectory_matches_slices(self, soliton_corrections):
        pt = build_profile_trajectory(soliton_corrections, 0.05)
        one = build_profile(soliton_corrections.at(7), 0.05)
        snap = pt.at(7)
        for name in ("rho_bar", "u1_bar", "theta_bar", "phi_bar"):
            np.testing.assert_array_equal(getattr(snap, name), getattr(one, name))
        assert len(pt) == len(soliton_corrections)


class TestDefects:
    def test_constant_states_are_exact(self, small):
        p = _constant_trajectory(small, u=0.3)
        res = profile_residual_ep(p)
        assert isinstance(res, ResidualNorms)
        assert max(res) <= 1e-13

    def test_poisson_defect_of_density_bump(self, small):
        g = small
        z = np.zeros(g.n)
        rho = 1.0 + 0.1 * np.cos(g.x)
        *_, poisson = ep_defects(g, 0.5, rho, z, np.full(g.n, 1.5), z, z, z, z)
        np.testing.assert_allclose(poisson, -0.1 * np.cos(g.x), atol=1e-15)

    def test_viscous_example(self, small):
        g = small
        u = np.sin(g.x)
        vel, temp = viscous_terms(g, np.ones(g.n), u, np.full(g.n, 1.5), TransportCoeffs.constant())
        np.testing.assert_allclose(vel, -(4.0 / 3.0) * np.sin(g.x), atol=1e-13)
        np.testing.assert_allclose(temp, (4.0 / 3.0) * np.cos(g.x) ** 2, atol=1e-13)

    def test_nsp_with_zero_epsdelta_is_ep(self, soliton_corrections):
        pt = build_profile_trajectory(soliton_corrections, 0.05)
        assert profile_residual_nsp(pt, TransportCoeffs.constant(), 0.0) == profile_residual_ep(pt)

    def test_nsp_shift_is_viscous_term(self, soliton_corrections):
        # EP defect minus NSP defect is epsdelta times the viscous term
        pt = build_profile_trajectory(soliton_corrections, 0.05)
        coeffs = TransportCoeffs.sqrt_theta()
        ed = 1e-3
        ep = profile_residual_ep(pt)
        nsp = profile_residual_nsp(pt, coeffs, ed)
        vel = max(pt.grid.l2(viscous_terms(pt.grid, r, u, t, coeffs)[0])
                  for r, u, t in zip(pt.rho_bar, pt.u1_bar, pt.theta_bar))
        assert nsp.mass == ep.mass and nsp.poisson == ep.poisson
        assert abs(nsp.velocity - ep.velocity) <= ed * vel * (1 + 1e-9)

    def test_negative_epsdelta_rejected(self, small):
        with pytest.raises(ValueError):
            profile_residual_nsp(_constant_trajectory(small), TransportCoeffs.constant(), -1.0)
