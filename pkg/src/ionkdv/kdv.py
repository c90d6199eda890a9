"""Leading-order KdV profile: 2 phi_t + phi_xxx + 3 phi phi_x = 0."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .spectral import ETDRK4, Grid1D, TruncationWarning


class StepFailure(RuntimeError):
    """A time step produced non-finite or inadmissible values."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class KdVState:
    grid: Grid1D
    time: float
    phi0: np.ndarray


@dataclass(frozen=True)
class KdVTrajectory:
    grid: Grid1D
    dt: float
    times: np.ndarray
    phi0: np.ndarray  # (n_times, n)

    def state(self, i: int) -> KdVState:
        return KdVState(self.grid, float(self.times[i]), self.phi0[i])


class Invariants(NamedTuple):
    mass: float
    momentum: float
    hamiltonian: float


def kdv_time_derivative(grid: Grid1D, phi0: np.ndarray) -> np.ndarray:
    """phi_t = -1/2 phi_xxx - 3/2 phi phi_x, quadratic term dealiased."""
    c = grid.rfft(phi0)
    lin = grid.irfft(-0.5 * grid.deriv_symbol(3) * c)
    sq = grid.rfft(grid.smooth_product(phi0, phi0))
    return lin + grid.irfft(-0.75 * grid.deriv_symbol(1) * sq)


kdv_rhs = kdv_time_derivative


def _kdv_linear(grid: Grid1D) -> np.ndarray:
    return -0.5 * grid.deriv_symbol(3)


def _kdv_nonlinear(grid: Grid1D):
    mask = grid.dealias_mask
    d1 = grid.deriv_symbol(1)

    def nonlinear(c: np.ndarray) -> np.ndarray:
        u = grid.irfft(mask * c)
        return -0.75 * d1 * mask * grid.rfft(u * u)

    return nonlinear


@lru_cache(maxsize=32)
def _stepper(grid: Grid1D, dt: float) -> ETDRK4:
    return ETDRK4(_kdv_linear(grid), _kdv_nonlinear(grid), dt)


def kdv_step(state: KdVState, dt: float) -> KdVState:
    """One ETDRK4 step; dispersion is integrated exactly per mode."""
    grid = state.grid
    c = _stepper(grid, float(dt)).step(grid.rfft(state.phi0))
    phi = grid.irfft(c)
    if not np.all(np.isfinite(phi)):
        raise StepFailure("KdV step produced non-finite values", {"time": state.time, "dt": dt})
    return KdVState(grid, state.time + dt, phi)


def n_steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"final time {T} is not an integer multiple of dt={dt}")
    return n


def kdv_solve(grid: Grid1D, phi0: np.ndarray, T: float, dt: float, stride: int = 1) -> KdVTrajectory:
    n = n_steps_for(T, dt)
    stepper = _stepper(grid, float(dt))
    c = grid.rfft(np.asarray(phi0, dtype=float))
    times, snaps = [0.0], [grid.irfft(c)]
    for i in range(1, n + 1):
        c = stepper.step(c)
        if i % stride == 0 or i == n:
            u = grid.irfft(c)
            if not np.all(np.isfinite(u)):
                raise StepFailure("KdV solve blew up", {"step": i, "time": i * dt})
            times.append(i * dt)
            snaps.append(u)
    return KdVTrajectory(grid, float(dt), np.array(times), np.array(snaps))


def soliton_exact(grid: Grid1D, k: float, t: float, x0: float | None = None) -> np.ndarray:
    """
    Travelling soliton 4k^2 sech^2(k (x - x0 - 2k^2 t)), wrapped periodically.

    ``x0`` defaults to the box centre.  Warns when the tails at the box edge
    exceed 1e-10 of the amplitude.
    """
    if k <= 0:
        raise ValueError("soliton wavenumber must be positive")
    L = grid.length
    x0 = 0.5 * L if x0 is None else x0
    amp = 4.0 * k * k
    xi = np.mod(grid.x - x0 - 2.0 * k * k * t + 0.5 * L, L) - 0.5 * L
    edge = amp / np.cosh(k * 0.5 * L) ** 2
    if edge > 1e-10 * amp:
        warnings.warn(
            f"soliton tail {edge:.2e} at the box edge; box too small for k={k}",
            TruncationWarning,
            stacklevel=2,
        )
    return amp / np.cosh(k * xi) ** 2


def kdv_invariants(grid: Grid1D, phi0: np.ndarray) -> Invariants:
    h = grid.spacing
    px = grid.deriv(phi0, 1)
    return Invariants(
        mass=float(np.sum(phi0) * h),
        momentum=float(np.sum(phi0**2) * h),
        hamiltonian=float(np.sum(phi0**3 / 4.0 - px**2 / 4.0) * h),
    )
