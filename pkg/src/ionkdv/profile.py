"""
Epsilon-assembled approximate profile and its defect in the fluid systems.

The profile is

    rho_bar   = 1   + eps U0 + eps^2 rho2   + eps^3 rho3
    u1_bar    = U0  + eps U1 + eps^2 U2               (U3 = 0)
    theta_bar = 3/2 + eps U0 + eps^2 theta2 + eps^3 theta3
    phi_bar   = U0  + eps phi1 + eps^2 phi2           (phi3 = 0)

with transverse velocities identically zero.  Residuals are obtained by
inserting the profile into the shifted Euler-Poisson equations, with time
derivatives from fourth-order differences of the stored snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fluid import TransportCoeffs
from .hierarchy import CorrectionSet, CorrectionTrajectory, time_derivative
from .spectral import Grid1D

THETA_BOUNDS = (4.0 / 3.0, 2.0)


class InadmissibleProfile(ValueError):
    """The assembled profile leaves the admissible (rho > 0, 4/3 < theta < 2) set."""


@dataclass(frozen=True)
class ApproxProfile:
    grid: Grid1D
    epsilon: float
    time: float
    rho_bar: np.ndarray
    u1_bar: np.ndarray
    theta_bar: np.ndarray
    phi_bar: np.ndarray


@dataclass(frozen=True)
class ProfileTrajectory:
    """Profile snapshots at every step of the underlying correction run."""

    grid: Grid1D
    epsilon: float
    dt: float
    times: np.ndarray
    rho_bar: np.ndarray
    u1_bar: np.ndarray
    theta_bar: np.ndarray
    phi_bar: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def at(self, i: int) -> ApproxProfile:
        return ApproxProfile(self.grid, self.epsilon, float(self.times[i]), self.rho_bar[i],
                             self.u1_bar[i], self.theta_bar[i], self.phi_bar[i])


class ResidualNorms(NamedTuple):
    """Max over stored times of the L2 norm of each equation's defect."""

    mass: float
    velocity: float
    temperature: float
    poisson: float


def assemble(c0, c1, c2, c3, eps: float):
    """c0 + eps c1 + eps^2 c2 + eps^3 c3, always in this evaluation order."""
    return c0 + eps * c1 + eps**2 * c2 + eps**3 * c3


def _check_admissible(rho, theta, eps: float) -> None:
    lo, hi = THETA_BOUNDS
    if np.min(rho) <= 0.0:
        raise InadmissibleProfile(f"rho_bar <= 0 at eps={eps}: min {np.min(rho):.4g}")
    if np.min(theta) <= lo or np.max(theta) >= hi:
        raise InadmissibleProfile(
            f"theta_bar leaves (4/3, 2) at eps={eps}: range [{np.min(theta):.4g}, {np.max(theta):.4g}]"
        )


def _assemble_fields(src, eps: float):
    zero = 0.0
    rho = assemble(1.0, src.U0, src.rho2, src.rho3, eps)
    u1 = assemble(src.U0, src.U1, src.U2, zero, eps)
    theta = assemble(1.5, src.U0, src.theta2, src.theta3, eps)
    phi = assemble(src.U0, src.phi1, src.phi2, zero, eps)
    return rho, u1, theta, phi


def build_profile(cs: CorrectionSet, epsilon: float) -> ApproxProfile:
    """Assemble the profile at one time slice; rejects inadmissible ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rho, u1, theta, phi = _assemble_fields(cs, epsilon)
    _check_admissible(rho, theta, epsilon)
    return ApproxProfile(cs.grid, float(epsilon), cs.time, rho, u1, theta, phi)


def build_profile_trajectory(traj: CorrectionTrajectory, epsilon: float) -> ProfileTrajectory:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rho, u1, theta, phi = _assemble_fields(traj, epsilon)
    _check_admissible(rho, theta, epsilon)
    return ProfileTrajectory(traj.grid, float(epsilon), traj.dt, traj.times, rho, u1, theta, phi)


# -- residuals -----------------------------------------------------------------


def ep_defects(grid: Grid1D, eps: float, rho, u, theta, phi, drho, du, dtheta):
    """
    Left-hand sides of the shifted Euler-Poisson system.  Works row-wise on
    stacked snapshots.  Returns ``(mass, velocity, temperature, poisson)``.
    """
    D = grid.deriv
    P = grid.smooth_product
    rx = D(rho)
    ux = D(u)
    tx = D(theta)
    mass = drho - rx / eps + D(P(rho, u))
    vel = (du - ux / eps + P(u, ux) + (2.0 / 3.0) * P(theta / rho, rx)
           + (2.0 / 3.0) * tx + D(phi) / eps)
    temp = dtheta - tx / eps + P(u, tx) + (2.0 / 3.0) * P(theta, ux)
    poisson = -eps**2 * D(phi, 2) + eps * phi - (rho - 1.0)
    return mass, vel, temp, poisson


def viscous_terms(grid: Grid1D, rho, u, theta, coeffs: TransportCoeffs):
    """
    Viscous additions (without the eps*delta factor) to the velocity and
    temperature equations, zero transverse velocity.
    """
    D = grid.deriv
    P = grid.smooth_product
    ux = D(u)
    mu = coeffs.mu(theta)
    kappa = coeffs.kappa(theta)
    vel = (4.0 / 3.0) * D(P(mu, ux)) / rho
    temp = (D(P(kappa, D(theta))) + (4.0 / 3.0) * P(mu, ux, ux)) / rho
    return vel, temp


def _row_l2_max(grid: Grid1D, f: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(f * f, axis=-1) * grid.spacing)))


def _defects(p: ProfileTrajectory):
    drho = time_derivative(p.rho_bar, p.dt)
    du = time_derivative(p.u1_bar, p.dt)
    dtheta = time_derivative(p.theta_bar, p.dt)
    return ep_defects(p.grid, p.epsilon, p.rho_bar, p.u1_bar, p.theta_bar, p.phi_bar,
                      drho, du, dtheta)


def profile_residual_ep(p: ProfileTrajectory) -> ResidualNorms:
    return ResidualNorms(*(_row_l2_max(p.grid, r) for r in _defects(p)))


def profile_residual_nsp(p: ProfileTrajectory, coeffs: TransportCoeffs, epsdelta: float) -> ResidualNorms:
    """Defect in the viscous system: the EP defect minus the eps*delta terms."""
    if epsdelta < 0:
        raise ValueError("epsdelta must be non-negative")
    mass, vel, temp, poisson = _defects(p)
    if epsdelta > 0:
        v, t = viscous_terms(p.grid, p.rho_bar, p.u1_bar, p.theta_bar, coeffs)
        vel = vel - epsdelta * v
        temp = temp - epsdelta * t
    return ResidualNorms(*(_row_l2_max(p.grid, r) for r in (mass, vel, temp, poisson)))
