import math

import numpy as np
import pytest

from ionkdv.kdv import (
    KdVState, StepFailure, kdv_invariants, kdv_rhs, kdv_solve, kdv_step, n_steps_for, soliton_exact,
)
from ionkdv.spectral import TruncationWarning, make_grid


@pytest.fixture(scope="module")
def g():
    return make_grid(40 * math.pi, 512)


class TestRhs:
    def test_constant(self, g):
        assert np.max(np.abs(kdv_rhs(g, np.full(g.n, 0.7)))) < 1e-14

    def test_sine(self):
        g = make_grid(2 * math.pi, 32)
        x = g.x
        np.testing.assert_allclose(kdv_rhs(g, np.sin(x)), 0.5 * np.cos(x) - 1.5 * np.sin(x) * np.cos(x), atol=1e-13)

    @pytest.mark.parametrize("n, tol", [(512, 1e-7), (1024, 1e-10)])
    def test_travelling_wave_identity(self, n, tol):
        g = make_grid(40 * math.pi, n)
        k = 0.5
        phi = soliton_exact(g, k, 0.0)
        assert np.max(np.abs(kdv_rhs(g, phi) + 2 * k * k * g.deriv(phi))) <= tol


class TestSoliton:
    def test_amplitude_and_centre(self, g):
        phi = soliton_exact(g, 0.5, 0.0)
        assert phi.max() == pytest.approx(1.0)
        assert g.x[np.argmax(phi)] == pytest.approx(g.length / 2)

    def test_translation(self, g):
        # speed 2k^2 = 1/2: at t=4 the profile has moved by 2
        shifted = soliton_exact(g, 0.5, 0.0, x0=g.length / 2 + 2.0)
        np.testing.assert_allclose(soliton_exact(g, 0.5, 4.0), shifted, atol=1e-14)

    def test_box_too_small_warns(self):
        g = make_grid(10.0, 64)
        with pytest.warns(TruncationWarning):
            soliton_exact(g, 0.5, 0.0)

    def test_rejects_nonpositive_k(self, g):
        with pytest.raises(ValueError):
            soliton_exact(g, 0.0, 0.0)


class TestStepping:
    def test_constant_and_zero_states(self, g):
        for c in (0.0, 0.3):
            s = kdv_step(KdVState(g, 0.0, np.full(g.n, c)), 0.05)
            np.testing.assert_allclose(s.phi0, c, atol=1e-14)
            assert s.time == pytest.approx(0.05)

    def test_nonfinite_raises(self, g):
        with pytest.raises(StepFailure):
            kdv_step(KdVState(g, 0.0, np.full(g.n, np.nan)), 0.01)

    def test_soliton_accuracy(self, g):
        traj = kdv_solve(g, soliton_exact(g, 0.5, 0.0), 1.0, 0.01)
        exact = soliton_exact(g, 0.5, 1.0)
        assert g.l2(traj.phi0[-1] - exact) / g.l2(exact) <= 1e-6

    def test_temporal_order(self, g):
        phi = soliton_exact(g, 0.5, 0.0)
        ref = kdv_solve(g, phi, 1.0, 0.0025).phi0[-1]
        errs = [g.l2(kdv_solve(g, phi, 1.0, dt).phi0[-1] - ref) for dt in (0.05, 0.025, 0.0125)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all((orders >= 3.7) & (orders <= 4.3)), orders

    def test_mean_conserved(self, g, rng):
        phi = soliton_exact(g, 0.5, 0.0) + 0.1 * soliton_exact(g, 0.4, 0.0, x0=30.0)
        traj = kdv_solve(g, phi, 1.0, 0.01, stride=10)
        means = traj.phi0.mean(axis=1)
        assert np.max(np.abs(means - means[0])) <= 1e-10

    def test_final_time_must_be_multiple_of_dt(self):
        with pytest.raises(ValueError):
            n_steps_for(1.0, 0.3)
        assert n_steps_for(1.0, 0.0025) == 400

    def test_stride(self, g):
        traj = kdv_solve(g, soliton_exact(g, 0.5, 0.0), 1.0, 0.01, stride=30)
        np.testing.assert_allclose(traj.times, [0, 0.3, 0.6, 0.9, 1.0])


class TestInvariants:
    def test_closed_forms(self, g):
        assert kdv_invariants(g, np.zeros(g.n)) == (0.0, 0.0, 0.0)
        m, p, h = kdv_invariants(g, np.ones(g.n))
        L = g.length
        assert (m, p, h) == pytest.approx((L, L, L / 4))

    def test_soliton_values(self, g):
        # mass 8k, momentum 64k^3/3 for 4k^2 sech^2(kx)
        k = 0.5
        m, p, _ = kdv_invariants(g, soliton_exact(g, k, 0.0))
        assert m == pytest.approx(8 * k, rel=1e-12)
        assert p == pytest.approx(64 * k**3 / 3, rel=1e-12)

    def test_conserved(self, g):
        traj = kdv_solve(g, soliton_exact(g, 0.5, 0.0), 1.0, 0.01)
        inv = np.array([kdv_invariants(g, p) for p in traj.phi0])
        drift = np.max(np.abs(inv - inv[0]), axis=0) / np.abs(inv[0])
        assert np.all(drift <= 1e-8), drift
