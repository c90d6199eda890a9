"""
Higher-order corrections of the small-amplitude expansion around (1, 0, 3/2).

Given the KdV profile ``U0 = rho1 = theta1 = phi0`` the corrections are

* level 2, algebraic in ``(U0, U1)``::

      rho2   = U1 - U0''/2 + U0**2/4
      phi1   = U1 + U0''/2 + U0**2/4
      theta2 = U1 - U0''/2 + U0**2/12

  with ``U1`` transported by ``U1_t + U1'''/2 + 3/2 (U0 U1)' = N1(U0)``;

* level 3, recovered from ``(U0, U1, U2)`` through antiderivatives, with
  ``U2`` transported by ``U2_t + (U0 U2)' = N2``.

Every time derivative inside a source is replaced by its spatial expression
through the evolution equations before discretisation.  ``U3`` and ``phi3``
are taken identically zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kdv import StepFailure, kdv_time_derivative, n_steps_for
from .spectral import ETDRK4, Grid1D, TruncationWarning

EQUATION_LABELS = (
    "mass1", "mass2", "mass3",
    "velocity1", "velocity2", "velocity3", "velocity4",
    "temperature1", "temperature2", "temperature3",
    "poisson1", "poisson2", "poisson3",
)


@dataclass(frozen=True)
class CorrectionSet:
    """All corrections at one time slice (``U3 = phi3 = 0``)."""

    grid: Grid1D
    time: float
    U0: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray
    theta2: np.ndarray
    theta3: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    @property
    def rho1(self) -> np.ndarray:
        return self.U0

    @property
    def theta1(self) -> np.ndarray:
        return self.U0

    @property
    def phi0(self) -> np.ndarray:
        return self.U0

    @property
    def U3(self) -> np.ndarray:
        return np.zeros_like(self.U0)

    @property
    def phi3(self) -> np.ndarray:
        return np.zeros_like(self.U0)


@dataclass
class CorrectionTrajectory:
    """Stacked corrections, arrays of shape ``(n_times, n)``; stride 1 in time."""

    grid: Grid1D
    dt: float
    times: np.ndarray
    U0: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray
    theta2: np.ndarray
    theta3: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    metadata: dict = field(default_factory=dict)

    FIELDS = ("U0", "U1", "U2", "rho2", "rho3", "theta2", "theta3", "phi1", "phi2")

    def __len__(self) -> int:
        return len(self.times)

    def at(self, i: int) -> CorrectionSet:
        return CorrectionSet(self.grid, float(self.times[i]), *(getattr(self, f)[i] for f in self.FIELDS))

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"times": self.times}
        out.update({f: getattr(self, f) for f in self.FIELDS})
        return out


# -- level 1 ------------------------------------------------------------------


def first_order(phi0: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """U0 = rho1 = theta1 = phi0."""
    return phi0, phi0, phi0


# -- level 2 ------------------------------------------------------------------


def n1_source(grid: Grid1D, U0: np.ndarray) -> np.ndarray:
    """Forcing of the U1 equation with U0_t eliminated through KdV."""
    D = grid.deriv
    P = grid.smooth_product
    dtU0 = kdv_time_derivative(grid, U0)
    inner = P(-0.5 * D(U0, 2) + 0.25 * P(U0, U0), U0)
    return (
        0.25 * D(dtU0, 2)
        - 0.25 * P(U0, dtU0)
        - 0.25 * D(U0, 5)
        - 0.125 * D(P(U0, U0), 3)
        - 0.5 * D(inner, 1)
        - (5.0 / 6.0) * D(U0, 1)
    )


def level2_algebraic(grid: Grid1D, U0: np.ndarray, U1: np.ndarray):
    """Return ``(rho2, phi1, theta2)``."""
    d2 = grid.deriv(U0, 2)
    sq = grid.smooth_product(U0, U0)
    rho2 = U1 - 0.5 * d2 + 0.25 * sq
    phi1 = U1 + 0.5 * d2 + 0.25 * sq
    theta2 = U1 - 0.5 * d2 + sq / 12.0
    return rho2, phi1, theta2


def n2_source(grid: Grid1D, U0, U1, rho2, theta2) -> np.ndarray:
    """
    Forcing of the U2 equation (``U3 = phi3 = 0``)::

        N2 = -U1 U1' - rho2' + U0 U0'/3 - 2/3 theta2'

    The ``+U0 U0'/3`` comes from expanding ``(2/3) theta rho_x / rho`` to
    second order, which contributes ``(2/3) theta1 rho1' - rho1 rho1'``.
    """
    D = grid.deriv
    P = grid.smooth_product
    return -P(U1, D(U1)) - D(rho2) + P(U0, D(U0)) / 3.0 - (2.0 / 3.0) * D(theta2)


# -- level 3 ------------------------------------------------------------------


def u0_dtu0_antiderivative(grid: Grid1D, U0: np.ndarray) -> np.ndarray:
    """Closed form of the antiderivative of ``U0 * U0_t``: -U0 U0''/2 + U0'^2/4 - U0^3/2."""
    P = grid.smooth_product
    d1, d2 = grid.deriv(U0, 1), grid.deriv(U0, 2)
    return -0.5 * P(U0, d2) + 0.25 * P(d1, d1) - 0.5 * P(U0, U0, U0)


def n1_antiderivative(grid: Grid1D, U0: np.ndarray) -> np.ndarray:
    """Closed-form antiderivative of :func:`n1_source`, decaying with U0."""
    D = grid.deriv
    P = grid.smooth_product
    dtU0 = kdv_time_derivative(grid, U0)
    J = u0_dtu0_antiderivative(grid, U0)
    return (
        0.25 * D(dtU0, 1)
        - 0.25 * J
        - 0.25 * D(U0, 4)
        - 0.125 * D(P(U0, U0), 2)
        - 0.5 * P(-0.5 * D(U0, 2) + 0.25 * P(U0, U0), U0)
        - (5.0 / 6.0) * U0
    )


def u1_time_derivative(grid: Grid1D, U0, U1) -> np.ndarray:
    return n1_source(grid, U0) - 0.5 * grid.deriv(U1, 3) - 1.5 * grid.deriv(grid.smooth_product(U0, U1))


def theta3_integrand(grid: Grid1D, U0, U1, theta2) -> np.ndarray:
    """theta2_t + U0 theta2' + U1 U0' + 2/3 theta2 U0' + 2/3 U0 U1' (time derivatives eliminated)."""
    D = grid.deriv
    P = grid.smooth_product
    dtU0 = kdv_time_derivative(grid, U0)
    dt_theta2 = u1_time_derivative(grid, U0, U1) - 0.5 * D(dtU0, 2) + P(U0, dtU0) / 6.0
    dU0 = D(U0)
    return (
        dt_theta2
        + P(U0, D(theta2))
        + P(U1, dU0)
        + (2.0 / 3.0) * P(theta2, dU0)
        + (2.0 / 3.0) * P(U0, D(U1))
    )


def theta3_antiderivative_closed(grid: Grid1D, U0, U1) -> np.ndarray:
    """
    Second route for the theta3 antiderivative, reduced to local expressions
    by integrating by parts (decaying gauge).
    """
    P = grid.smooth_product
    D = grid.deriv
    dtU0 = kdv_time_derivative(grid, U0)
    J = u0_dtu0_antiderivative(grid, U0)
    int_dtU1 = n1_antiderivative(grid, U0) - 0.5 * D(U1, 2) - 1.5 * P(U0, U1)
    d1 = D(U0)
    return (
        -0.5 * D(dtU0)
        + (5.0 / 3.0) * P(U0, U1)
        + int_dtU1
        + J / 6.0
        - 0.5 * P(U0, D(U0, 2))
        + P(d1, d1) / 12.0
        + (2.0 / 27.0) * P(U0, U0, U0)
    )


@dataclass(frozen=True)
class Level3:
    rho3: np.ndarray
    phi2: np.ndarray
    theta3: np.ndarray
    theta3_integrand_mean: float
    theta3_gauge: float


def recover_level3(grid: Grid1D, U0, U1, U2, rho2, mean_tol: float | None = 1e-8) -> Level3:
    """
    Recover ``(rho3, phi2, theta3)`` from the transported unknowns.

    ``rho3`` and ``phi2`` use closed-form antiderivatives.  ``theta3`` uses a
    numerical zero-mean antiderivative; ``theta3_gauge`` is its value at the
    box edge (the constant separating it from the decaying gauge).
    """
    P = grid.smooth_product
    D = grid.deriv
    dtU0 = kdv_time_derivative(grid, U0)
    J = u0_dtu0_antiderivative(grid, U0)
    int_dtU1 = n1_antiderivative(grid, U0) - 0.5 * D(U1, 2) - 1.5 * P(U0, U1)
    int_dtrho2 = int_dtU1 - 0.5 * D(dtU0) + 0.5 * J
    U0U1 = P(U0, U1)

    rho3 = U2 + P(rho2, U0) + U0U1 + int_dtrho2
    phi2 = U2 - U0U1 - (5.0 / 3.0) * U0 - int_dtU1

    theta2 = U1 - 0.5 * D(U0, 2) + P(U0, U0) / 12.0
    f = theta3_integrand(grid, U0, U1, theta2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        g, m = grid.antideriv_zero_mean(f, mean_tol=None)
    if mean_tol is not None and abs(m) > mean_tol:
        warnings.warn(
            f"theta3 integrand mean {m:.3e} exceeds {mean_tol:.1e} (box truncation)",
            TruncationWarning,
            stacklevel=2,
        )
    theta3 = U2 + g
    return Level3(rho3, phi2, theta3, m, float(g[0]))


# -- transport of U1, U2 --------------------------------------------------------


class HierarchySolver:
    """
    Co-evolves ``(U0, U1, U2)`` with one ETDRK4 integrator.

    The dispersive operator ``-1/2 d^3`` is exact for U0 and U1; U2 has no
    linear part, for which ETDRK4 reduces to classical RK4.
    """

    def __init__(self, grid: Grid1D, dt: float):
        self.grid = grid
        self.dt = float(dt)
        disp = -0.5 * grid.deriv_symbol(3)
        linear = np.stack([disp, disp, np.zeros_like(disp)])
        self._stepper = ETDRK4(linear, self._nonlinear, self.dt)

    def _nonlinear(self, c: np.ndarray) -> np.ndarray:
        g = self.grid
        mask = g.dealias_mask
        d1 = g.deriv_symbol(1)
        U0, U1, U2 = (g.irfft(mask * ci) for ci in c)
        rho2, _, theta2 = level2_algebraic(g, U0, U1)
        out = np.empty_like(c)
        out[0] = -0.75 * d1 * mask * g.rfft(U0 * U0)
        out[1] = -1.5 * d1 * mask * g.rfft(U0 * U1) + g.rfft(n1_source(g, U0))
        out[2] = -d1 * mask * g.rfft(U0 * U2) + g.rfft(n2_source(g, U0, U1, rho2, theta2))
        return out

    def evolve(self, phi0, T: float, U1_init=None, U2_init=None):
        """Return ``(times, U0, U1, U2)`` sampled at every step."""
        g = self.grid
        n = n_steps_for(T, self.dt)
        zero = np.zeros(g.n)
        y = np.stack([np.asarray(phi0, float),
                      zero if U1_init is None else np.asarray(U1_init, float),
                      zero if U2_init is None else np.asarray(U2_init, float)])
        c = np.fft.rfft(y, axis=-1)
        out = np.empty((n + 1, 3, g.n))
        out[0] = y
        for i in range(1, n + 1):
            c = self._stepper.step(c)
            out[i] = np.fft.irfft(c, n=g.n, axis=-1)
            if not np.all(np.isfinite(out[i])):
                raise StepFailure("correction transport blew up", {"step": i, "time": i * self.dt})
        times = np.arange(n + 1) * self.dt
        return times, out[:, 0], out[:, 1], out[:, 2]


def solve_U1(grid: Grid1D, phi0_init, T: float, dt: float, U1_init=None):
    """Time series ``(times, U1)`` co-evolved with the KdV profile."""
    times, _, U1, _ = HierarchySolver(grid, dt).evolve(phi0_init, T, U1_init=U1_init)
    return times, U1


def solve_U2(grid: Grid1D, phi0_init, T: float, dt: float, U1_init=None, U2_init=None):
    times, _, _, U2 = HierarchySolver(grid, dt).evolve(phi0_init, T, U1_init, U2_init)
    return times, U2


def solve_hierarchy(
    grid: Grid1D,
    phi0_init,
    T: float,
    dt: float,
    U1_init=None,
    U2_init=None,
    mean_tol: float | None = 1e-8,
) -> CorrectionTrajectory:
    times, U0, U1, U2 = HierarchySolver(grid, dt).evolve(phi0_init, T, U1_init, U2_init)
    nt = len(times)
    rho2 = np.empty_like(U0)
    phi1 = np.empty_like(U0)
    theta2 = np.empty_like(U0)
    rho3 = np.empty_like(U0)
    phi2 = np.empty_like(U0)
    theta3 = np.empty_like(U0)
    means = np.empty(nt)
    gauges = np.empty(nt)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        for i in range(nt):
            rho2[i], phi1[i], theta2[i] = level2_algebraic(grid, U0[i], U1[i])
            lv = recover_level3(grid, U0[i], U1[i], U2[i], rho2[i], mean_tol=mean_tol)
            rho3[i], phi2[i], theta3[i] = lv.rho3, lv.phi2, lv.theta3
            means[i], gauges[i] = lv.theta3_integrand_mean, lv.theta3_gauge
    if caught:
        warnings.warn(
            f"{len(caught)} of {nt} snapshots had theta3 integrand mean above tolerance "
            f"(max {np.max(np.abs(means)):.3e})",
            TruncationWarning,
            stacklevel=2,
        )
    meta = {
        "antiderivative_gauge": "zero-mean",
        "theta3_integrand_mean_max": float(np.max(np.abs(means))),
        "theta3_gauge_offset_max": float(np.max(np.abs(gauges))),
        "U3": 0.0,
        "phi3": 0.0,
    }
    return CorrectionTrajectory(grid, float(dt), times, U0, U1, U2, rho2, rho3,
                                theta2, theta3, phi1, phi2, meta)


# -- a-posteriori residuals ----------------------------------------------------


def time_derivative(snapshots: np.ndarray, dt: float) -> np.ndarray:
    """
    Fourth-order finite difference along axis 0 (five-point stencils,
    one-sided at the two ends).  Needs at least five snapshots.
    """
    f = np.asarray(snapshots, dtype=float)
    if f.shape[0] < 5:
        raise ValueError("need at least 5 snapshots for 4th-order differencing")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dt)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * dt)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * dt)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * dt)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * dt)
    return d


def _order_equations(g: Grid1D, cs: CorrectionSet, dt_fields: dict) -> dict[str, np.ndarray]:
    D = g.deriv
    P = g.smooth_product
    U0, U1, U2, U3 = cs.U0, cs.U1, cs.U2, cs.U3
    r1, r2, r3 = cs.rho1, cs.rho2, cs.rho3
    t1, t2, t3 = cs.theta1, cs.theta2, cs.theta3
    p0, p1, p2, p3 = cs.phi0, cs.phi1, cs.phi2, cs.phi3
    dt_r1, dt_r2 = dt_fields["rho1"], dt_fields["rho2"]
    dt_U0, dt_U1, dt_U2 = dt_fields["U0"], dt_fields["U1"], dt_fields["U2"]
    dt_t1, dt_t2 = dt_fields["theta1"], dt_fields["theta2"]
    return {
        "mass1": -D(r1) + D(U0),
        "mass2": dt_r1 - D(r2) + D(P(r1, U0)) + D(U1),
        "mass3": dt_r2 - D(r3) + D(P(r2, U0) + P(r1, U1)) + D(U2),
        "velocity1": -D(U0) + D(p0),
        "velocity2": dt_U0 - D(U1) + P(U0, D(U0)) + D(p1),
        "velocity3": dt_U1 - D(U2) + P(U0, D(U1)) + P(U1, D(U0)) + D(r1) + (2.0 / 3.0) * D(t1) + D(p2),
        "velocity4": (
            dt_U2 - D(U3) + P(U0, D(U2)) + P(U1, D(U1)) + P(U2, D(U0)) + D(r2)
            - P(r1, D(r1)) + (2.0 / 3.0) * P(t1, D(r1)) + (2.0 / 3.0) * D(t2) + D(p3)
        ),
        "temperature1": -D(t1) + D(U0),
        "temperature2": dt_t1 - D(t2) + P(U0, D(t1)) + (2.0 / 3.0) * P(t1, D(U0)) + D(U1),
        "temperature3": (
            dt_t2 - D(t3) + P(U0, D(t2)) + P(U1, D(t1)) + (2.0 / 3.0) * P(t2, D(U0))
            + (2.0 / 3.0) * P(t1, D(U1)) + D(U2)
        ),
        "poisson1": p0 - r1,
        "poisson2": -D(p0, 2) + p1 - r2,
        "poisson3": -D(p1, 2) + p2 - r3,
    }


def hierarchy_residuals(traj: CorrectionTrajectory) -> dict[str, float]:
    """
    Residual of every order equation, as the maximum over stored times of the
    L2 norm.  Time derivatives come from finite differences of the snapshots.
    """
    g = traj.grid
    dt_fields = {
        "U0": time_derivative(traj.U0, traj.dt),
        "U1": time_derivative(traj.U1, traj.dt),
        "U2": time_derivative(traj.U2, traj.dt),
        "rho2": time_derivative(traj.rho2, traj.dt),
        "theta2": time_derivative(traj.theta2, traj.dt),
    }
    dt_fields["rho1"] = dt_fields["theta1"] = dt_fields["U0"]
    worst = dict.fromkeys(EQUATION_LABELS, 0.0)
    for i in range(len(traj)):
        res = _order_equations(g, traj.at(i), {k: v[i] for k, v in dt_fields.items()})
        for k, v in res.items():
            worst[k] = max(worst[k], g.l2(v))
    return worst
