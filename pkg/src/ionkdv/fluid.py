"""
Shifted Euler-Poisson and weakly viscous Navier-Stokes-Poisson solvers.

Unknowns ``(rho, u1, theta)`` plus optional transverse velocities ``u2, u3``;
``phi`` is a constraint variable recovered from ``-eps^2 phi'' + eps phi =
rho - 1``.  Equations (viscous terms carry the factor ``epsdelta``)::

    rho_t   - rho_x/eps   + (rho u1)_x                                  = 0
    u1_t    - u1_x/eps    + u1 u1_x + 2/3 theta rho_x/rho + 2/3 theta_x
                          + phi_x/eps   = epsdelta 4/(3 rho) (mu u1_x)_x
    theta_t - theta_x/eps + u1 theta_x + 2/3 theta u1_x
            = epsdelta / rho [(kappa theta_x)_x + 4/3 mu u1_x^2 + mu (u2_x^2 + u3_x^2)]
    ui_t    - ui_x/eps    + u1 ui_x     = epsdelta / rho (mu ui_x)_x,   i = 2, 3

Time stepping: with ``r = rho - 1`` and ``s = theta - 3/2`` the linearisation
about ``(1, 0, 3/2)`` is, per Fourier mode,

    y' = (ik/eps) y - ik M y,   M = [[0, 1, 0], [a, 0, 2/3], [0, 1, 0]],
    a  = 1 + 1 / (eps^2 (1 + eps k^2)).

``M`` has eigenvalues ``0, +c, -c`` with ``c^2 = a + 2/3``, so the linear
block is diagonal in the coordinates ``(w0, w+, w-)`` and ETDRK4 integrates
it exactly.  ``w+`` is the slow (KdV) branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .kdv import StepFailure, n_steps_for
from .spectral import ETDRK4, Grid1D


class InadmissibleState(StepFailure):
    """Density or temperature became non-positive."""


# -- transport coefficients ------------------------------------------------------


def _unit(theta):
    return np.ones_like(np.asarray(theta, dtype=float))


def _sqrt(theta):
    return np.sqrt(theta)


@dataclass(frozen=True)
class TransportCoeffs:
    """Viscosity ``mu(theta)`` and heat conductivity ``kappa(theta)``."""

    name: str
    mu: Callable[[np.ndarray], np.ndarray]
    kappa: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def constant(cls) -> "TransportCoeffs":
        return cls("constant", _unit, _unit)

    @classmethod
    def sqrt_theta(cls) -> "TransportCoeffs":
        return cls("sqrt", _sqrt, _sqrt)

    @classmethod
    def from_name(cls, name: str) -> "TransportCoeffs":
        try:
            return {"constant": cls.constant, "sqrt": cls.sqrt_theta}[name]()
        except KeyError:
            raise ValueError(f"unknown transport model {name!r}; expected 'constant' or 'sqrt'") from None

    def bound(self, lo: float = 4.0 / 3.0, hi: float = 2.0, samples: int = 257) -> float:
        """Smallest C with mu, kappa in [1/C, C] on the sampled range."""
        th = np.linspace(lo, hi, samples)
        vals = np.concatenate([self.mu(th), self.kappa(th)])
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise ValueError(f"transport model {self.name!r} is not positive on [{lo}, {hi}]")
        return float(max(vals.max(), 1.0 / vals.min()))


# -- states ------------------------------------------------------------------------


@dataclass(frozen=True)
class FluidState:
    grid: Grid1D
    time: float
    rho: np.ndarray
    u1: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    u2: np.ndarray | None = None
    u3: np.ndarray | None = None

    def transverse(self) -> tuple[np.ndarray, np.ndarray]:
        z = np.zeros(self.grid.n)
        return (z if self.u2 is None else self.u2, z if self.u3 is None else self.u3)


class FluidRates(NamedTuple):
    rho: np.ndarray
    u1: np.ndarray
    theta: np.ndarray
    u2: np.ndarray
    u3: np.ndarray


def poisson_solve(grid: Grid1D, rho: np.ndarray, epsilon: float) -> np.ndarray:
    """Solve ``-eps^2 phi'' + eps phi = rho - 1`` mode by mode."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    k = grid.rwavenumbers
    return grid.irfft(grid.rfft(np.asarray(rho, float) - 1.0) / (epsilon**2 * k * k + epsilon))


def poisson_residual(grid: Grid1D, rho, phi, epsilon: float) -> float:
    r = -epsilon**2 * grid.deriv(phi, 2) + epsilon * phi - (rho - 1.0)
    return grid.l2(r)


def equilibrium(grid: Grid1D, time: float = 0.0) -> FluidState:
    n = grid.n
    return FluidState(grid, time, np.ones(n), np.zeros(n), np.full(n, 1.5), np.zeros(n))


def _check_state(rho, theta, where: dict) -> None:
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(theta))):
        raise StepFailure("non-finite fluid state", where)
    if np.min(rho) <= 0.0 or np.min(theta) <= 0.0:
        raise InadmissibleState(
            "positivity lost", {**where, "min_rho": float(np.min(rho)), "min_theta": float(np.min(theta))}
        )


# -- right-hand sides (physical-space form) ----------------------------------------------


def ep_rhs(state: FluidState, epsilon: float) -> FluidRates:
    """Time derivatives of ``(rho, u1, theta, u2, u3)``; phi is re-solved from rho."""
    g = state.grid
    rho, u, theta = state.rho, state.u1, state.theta
    _check_state(rho, theta, {"time": state.time})
    D = g.deriv
    P = g.smooth_product
    u2, u3 = state.transverse()
    phi = poisson_solve(g, rho, epsilon)
    rx, ux, tx = D(rho), D(u), D(theta)
    return FluidRates(
        rho=rx / epsilon - D(P(rho, u)),
        u1=ux / epsilon - P(u, ux) - (2.0 / 3.0) * P(theta / rho, rx) - (2.0 / 3.0) * tx - D(phi) / epsilon,
        theta=tx / epsilon - P(u, tx) - (2.0 / 3.0) * P(theta, ux),
        u2=D(u2) / epsilon - P(u, D(u2)),
        u3=D(u3) / epsilon - P(u, D(u3)),
    )


def nsp_rhs(state: FluidState, epsilon: float, epsdelta: float, coeffs: TransportCoeffs) -> FluidRates:
    """:func:`ep_rhs` plus the viscous, conductive and heating terms."""
    if epsdelta < 0:
        raise ValueError("epsdelta must be non-negative")
    base = ep_rhs(state, epsilon)
    if epsdelta == 0:
        return base
    g = state.grid
    D = g.deriv
    P = g.smooth_product
    rho, theta = state.rho, state.theta
    u2, u3 = state.transverse()
    mu, kappa = coeffs.mu(theta), coeffs.kappa(theta)
    ux, u2x, u3x = D(state.u1), D(u2), D(u3)
    heat = D(P(kappa, D(theta))) + (4.0 / 3.0) * P(mu, ux, ux) + P(mu, u2x, u2x) + P(mu, u3x, u3x)
    return FluidRates(
        rho=base.rho,
        u1=base.u1 + epsdelta * (4.0 / 3.0) * D(P(mu, ux)) / rho,
        theta=base.theta + epsdelta * heat / rho,
        u2=base.u2 + epsdelta * D(P(mu, u2x)) / rho,
        u3=base.u3 + epsdelta * D(P(mu, u3x)) / rho,
    )


# -- linear block ------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearBlock:
    """Per-mode eigen-decomposition of the linearisation about (1, 0, 3/2)."""

    ik: np.ndarray
    a: np.ndarray
    c: np.ndarray
    rates: np.ndarray  # (3, nk): w0, w+, w-

    def to_eigen(self, r, u, s):
        w0 = (r - s) / self.c**2
        plus = r - (2.0 / 3.0) * w0
        minus = u / self.c
        return np.stack([w0, 0.5 * (plus + minus), 0.5 * (plus - minus)])

    def from_eigen(self, w):
        w0, wp, wm = w
        return (2.0 / 3.0) * w0 + wp + wm, self.c * (wp - wm), -self.a * w0 + wp + wm


def linear_block(grid: Grid1D, epsilon: float) -> LinearBlock:
    k = grid.rwavenumbers
    ko = grid.rwavenumbers_odd
    a = 1.0 + 1.0 / (epsilon**2 * (1.0 + epsilon * k * k))
    c = np.sqrt(a + 2.0 / 3.0)
    # 1/eps - c without cancellation
    slow = (k * k / (epsilon * (1.0 + epsilon * k * k)) - 5.0 / 3.0) / (1.0 / epsilon + c)
    ik = 1j * ko
    rates = np.stack([ik / epsilon, ik * slow, ik * (1.0 / epsilon + c)])
    return LinearBlock(ik, a, c, rates)


def linear_frequencies(k: float, epsilon: float) -> np.ndarray:
    """Angular frequencies ``omega`` (``e^{i(kx - omega t)}``) of the three branches."""
    a = 1.0 + 1.0 / (epsilon**2 * (1.0 + epsilon * k * k))
    c = np.sqrt(a + 2.0 / 3.0)
    return -k * np.array([1.0 / epsilon, 1.0 / epsilon - c, 1.0 / epsilon + c])


# -- stepper -------------------------------------------------------------------------------


class FluidStepper:
    """
    ETDRK4 in eigen-coordinates.  The state is an array of rfft coefficients of
    shape ``(3, nk)`` (``w0, w+, w-``) or ``(5, nk)`` with transverse velocities.
    """

    def __init__(
        self,
        grid: Grid1D,
        epsilon: float,
        dt: float,
        epsdelta: float = 0.0,
        coeffs: TransportCoeffs | None = None,
        transverse: bool = False,
        linear_only: bool = False,
    ):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        if epsdelta < 0:
            raise ValueError("epsdelta must be non-negative")
        self.grid = grid
        self.epsilon = float(epsilon)
        self.epsdelta = float(epsdelta)
        self.coeffs = coeffs or TransportCoeffs.constant()
        self.transverse = transverse
        self.block = linear_block(grid, epsilon)
        lin = self.block.rates
        if transverse:
            lin = np.concatenate([lin, np.stack([self.block.ik / epsilon] * 2)])
        nonlinear = (lambda z: np.zeros_like(z)) if linear_only else self._nonlinear
        self._etd = ETDRK4(lin, nonlinear, dt)
        self.dt = float(dt)

    # coefficient <-> primitive maps
    def encode(self, rho, u1, theta, u2=None, u3=None) -> np.ndarray:
        g = self.grid
        w = self.block.to_eigen(g.rfft(rho - 1.0), g.rfft(u1), g.rfft(theta - 1.5))
        if self.transverse:
            z = np.zeros(g.n)
            w = np.concatenate([w, np.stack([g.rfft(z if u2 is None else u2), g.rfft(z if u3 is None else u3)])])
        return w

    def decode_modes(self, w: np.ndarray) -> np.ndarray:
        rows = list(self.block.from_eigen(w[:3]))
        if self.transverse:
            rows += [w[3], w[4]]
        return np.stack(rows)

    def decode(self, w: np.ndarray) -> np.ndarray:
        """Physical ``(r, u1, s[, u2, u3])`` with ``r = rho - 1``, ``s = theta - 3/2``."""
        return np.fft.irfft(self.decode_modes(w), n=self.grid.n, axis=-1)

    def _nonlinear(self, w: np.ndarray) -> np.ndarray:
        g = self.grid
        n = g.n
        mask = g.dealias_mask
        ik = self.block.ik
        modes = mask * self.decode_modes(w)
        fields = np.fft.irfft(modes, n=n, axis=-1)
        grads = np.fft.irfft(ik * modes, n=n, axis=-1)
        r, u, s = fields[0], fields[1], fields[2]
        rx, ux, sx = grads[0], grads[1], grads[2]
        rho = 1.0 + r
        prods = [
            r * u,
            u * ux + (2.0 / 3.0) * ((s - 1.5 * r) / rho) * rx,
            u * sx + (2.0 / 3.0) * s * ux,
        ]
        if self.transverse:
            prods += [u * grads[3], u * grads[4]]
        P = np.fft.rfft(np.stack(prods), axis=-1)
        P[0] *= ik
        out = -(mask * P)
        if self.epsdelta > 0:
            out = out + self.epsdelta * self._viscous(fields, grads, rho)
        head = self.block.to_eigen(out[0], out[1], out[2])
        return np.concatenate([head, out[3:]]) if self.transverse else head

    def _viscous(self, fields, grads, rho) -> np.ndarray:
        g = self.grid
        mask = g.dealias_mask
        ik = self.block.ik
        theta = 1.5 + fields[2]
        mu, kappa = self.coeffs.mu(theta), self.coeffs.kappa(theta)
        ux, sx = grads[1], grads[2]

        def dx(f):
            return g.irfft(ik * mask * g.rfft(f))

        heat = dx(kappa * sx) + (4.0 / 3.0) * mu * ux * ux
        rows = [np.zeros(g.n), (4.0 / 3.0) * dx(mu * ux) / rho, None]
        extra = []
        if self.transverse:
            for gi in (grads[3], grads[4]):
                heat = heat + mu * gi * gi
                extra.append(dx(mu * gi) / rho)
        rows[2] = heat / rho
        return mask * np.fft.rfft(np.stack(rows + extra), axis=-1)

    def step(self, w: np.ndarray) -> np.ndarray:
        return self._etd.step(w)


@lru_cache(maxsize=16)
def _cached_stepper(grid, epsilon, dt, epsdelta, coeffs, transverse) -> FluidStepper:
    return FluidStepper(grid, epsilon, dt, epsdelta, coeffs, transverse)


def _has_transverse(state: FluidState) -> bool:
    return any(v is not None and np.any(v != 0) for v in (state.u2, state.u3))


def ep_step(state: FluidState, epsilon: float, dt: float, epsdelta: float = 0.0,
            coeffs: TransportCoeffs | None = None) -> FluidState:
    """Advance one step (EP, or NSP when ``epsdelta > 0``)."""
    tr = _has_transverse(state)
    st = _cached_stepper(state.grid, float(epsilon), float(dt), float(epsdelta),
                         coeffs or TransportCoeffs.constant(), tr)
    _check_state(state.rho, state.theta, {"time": state.time})
    w = st.step(st.encode(state.rho, state.u1, state.theta, state.u2, state.u3))
    return _state_from(st, w, state.time + dt, tr)


def _state_from(st: FluidStepper, w, time: float, transverse: bool) -> FluidState:
    f = st.decode(w)
    rho, theta = 1.0 + f[0], 1.5 + f[2]
    _check_state(rho, theta, {"time": time})
    phi = poisson_solve(st.grid, rho, st.epsilon)
    u2, u3 = (f[3], f[4]) if transverse else (None, None)
    return FluidState(st.grid, time, rho, f[1], theta, phi, u2, u3)


# -- driver --------------------------------------------------------------------------------


@dataclass
class FluidTrajectory:
    grid: Grid1D
    epsilon: float
    epsdelta: float
    dt: float
    times: np.ndarray
    rho: np.ndarray
    u1: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> FluidState:
        return FluidState(self.grid, float(self.times[i]), self.rho[i], self.u1[i],
                          self.theta[i], self.phi[i], self.u2[i], self.u3[i])


def run_fluid(
    initial: FluidState,
    epsilon: float,
    epsdelta: float = 0.0,
    coeffs: TransportCoeffs | None = None,
    T: float = 1.0,
    dt: float = 0.0025,
    stride: int = 1,
) -> FluidTrajectory:
    """
    Integrate from ``initial`` to time ``T``; snapshots every ``stride`` steps.

    Diagnostics: per-snapshot L2 norms of the deviations from equilibrium,
    the mean of ``rho - 1`` and its maximum drift, the maximum elliptic
    residual, and the extreme values of ``rho`` and ``theta`` over all steps.
    Raises :class:`StepFailure` (with the failing step's diagnostics) on
    blow-up or loss of positivity.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    g = initial.grid
    coeffs = coeffs or TransportCoeffs.constant()
    n = n_steps_for(T, dt)
    tr = _has_transverse(initial)
    st = FluidStepper(g, epsilon, dt, epsdelta, coeffs, tr)
    _check_state(initial.rho, initial.theta, {"time": initial.time, "step": 0})
    w = st.encode(initial.rho, initial.u1, initial.theta, initial.u2, initial.u3)

    snaps = [st.decode(w)]
    times = [initial.time]
    min_rho, min_theta = float(np.min(initial.rho)), float(np.min(initial.theta))
    for i in range(1, n + 1):
        w = st.step(w)
        f = st.decode(w)
        t = initial.time + i * dt
        rho, theta = 1.0 + f[0], 1.5 + f[2]
        try:
            _check_state(rho, theta, {"time": t, "step": i})
        except StepFailure as exc:
            exc.diagnostics.update({"epsilon": epsilon, "epsdelta": epsdelta, "dt": dt})
            raise
        min_rho = min(min_rho, float(np.min(rho)))
        min_theta = min(min_theta, float(np.min(theta)))
        if i % stride == 0 or i == n:
            snaps.append(f)
            times.append(t)

    F = np.array(snaps)
    rho = 1.0 + F[:, 0]
    theta = 1.5 + F[:, 2]
    phi = np.array([poisson_solve(g, r, epsilon) for r in rho])
    zero = np.zeros_like(rho)
    u2, u3 = (F[:, 3], F[:, 4]) if tr else (zero, zero.copy())

    h = g.spacing
    mass_mean = F[:, 0].mean(axis=-1)
    diag = {
        "l2_rho": np.sqrt(np.sum(F[:, 0] ** 2, axis=-1) * h),
        "l2_u1": np.sqrt(np.sum(F[:, 1] ** 2, axis=-1) * h),
        "l2_theta": np.sqrt(np.sum(F[:, 2] ** 2, axis=-1) * h),
        "l2_phi": np.sqrt(np.sum(phi**2, axis=-1) * h),
        "mass_mean": mass_mean,
        "mass_drift": float(np.max(np.abs(mass_mean - mass_mean[0]))),
        "poisson_residual": max(poisson_residual(g, r, p, epsilon) for r, p in zip(rho, phi)),
        "min_rho": min_rho,
        "min_theta": min_theta,
    }
    return FluidTrajectory(g, float(epsilon), float(epsdelta), float(dt), np.array(times),
                           rho, F[:, 1], theta, phi, u2, u3, diag)
