"""
Scaling parameters, weak-collision bands and lab/scaled frame maps.

``delta = eps^(7/2) / nu`` is carried in log form so that tiny epsilons do
not lose precision.  The scaled variables relate to the lab ones through
``t_s = eps^(3/2) t`` and ``x_s = eps^(1/2) (x - t)``; moments scale as
``u_lab = eps u``, ``theta_lab = eps^2 theta``, ``phi_lab = eps phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .spectral import Grid1D

FINITE_TIME = "finite-time"
GLOBAL = "global"

# (lower exponent, upper exponent) of nu = eps^beta at c0 = 0, and the
# exponents of the two c1 boundary alternatives.
_BANDS = {
    FINITE_TIME: (0.5, 1.5),
    GLOBAL: (2.5, 3.0),
}
_EXP_TOL = 1e-12


@dataclass(frozen=True)
class ScalingParams:
    """
    Regime data for one ``(eps, nu)`` pair.

    Parameters
    ----------
    epsilon, nu : float
        Positive; ``epsilon < 1`` so that ``beta`` is defined.
    c0 : float
        Band-opening constant in ``(0, 1/2)``.
    c1 : float
        Boundary-alternative constant in ``(0, 1)``.
    """

    epsilon: float
    nu: float
    c0: float = 0.25
    c1: float = 0.01
    log_epsilon: float = field(init=False)
    log_nu: float = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu!r}")
        if not (0.0 < self.c0 < 0.5):
            raise ValueError(f"c0 must lie in (0, 1/2), got {self.c0!r}")
        if not (0.0 < self.c1 < 1.0):
            raise ValueError(f"c1 must lie in (0, 1), got {self.c1!r}")
        object.__setattr__(self, "log_epsilon", math.log(self.epsilon))
        object.__setattr__(self, "log_nu", math.log(self.nu))

    @classmethod
    def from_beta(cls, epsilon: float, beta: float, c0: float = 0.25, c1: float = 0.01) -> "ScalingParams":
        p = cls(epsilon, math.exp(beta * math.log(epsilon)), c0, c1)
        # keep the exact exponent rather than the round-tripped one
        object.__setattr__(p, "log_nu", beta * p.log_epsilon)
        return p

    @property
    def beta(self) -> float:
        return self.log_nu / self.log_epsilon

    @property
    def log_delta(self) -> float:
        return 3.5 * self.log_epsilon - self.log_nu

    @property
    def delta(self) -> float:
        return math.exp(self.log_delta)

    @property
    def epsdelta(self) -> float:
        return math.exp(self.log_epsilon + self.log_delta)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "nu": self.nu,
            "beta": self.beta,
            "delta": self.delta,
            "epsdelta": self.epsdelta,
            "c0": self.c0,
            "c1": self.c1,
        }


def delta_from_nu(epsilon: float, nu: float) -> float:
    """``eps^(7/2) / nu``, evaluated in log space."""
    if not (epsilon > 0 and nu > 0):
        raise ValueError("epsilon and nu must be positive")
    return math.exp(3.5 * math.log(epsilon) - math.log(nu))


class RegimeReport(NamedTuple):
    """
    ``lower_margin`` and ``upper_margin`` are natural-log distances of ``nu``
    from the two band edges (both non-negative inside the open band).
    ``boundary`` names the boundary case that admitted ``nu``, if any.
    """

    which: str
    in_band: bool
    beta: float
    lower_margin: float
    upper_margin: float
    boundary: str | None
    band_empty: bool


def check_regime(params: ScalingParams, which: str = FINITE_TIME) -> RegimeReport:
    """
    Membership of ``nu`` in the finite-time band
    ``eps^(3/2 - c0) <= nu <= eps^(1/2 + c0)`` or the global band
    ``eps^(3 - c0) <= nu <= eps^(5/2 + c0)``.

    Boundary cases also count: ``nu = c1 eps^lo`` and ``nu = eps^hi / c1``
    with ``(lo, hi) = (1/2, 3/2)`` or ``(5/2, 3)``, and, independently of
    ``c1``, ``nu = eps^lo`` or ``nu = eps^hi`` (the band endpoints reached as
    ``c0 -> 0``).
    """
    if which not in _BANDS:
        raise ValueError(f"unknown band {which!r}; expected {FINITE_TIME!r} or {GLOBAL!r}")
    lo, hi = _BANDS[which]
    le, ln = params.log_epsilon, params.log_nu
    # log eps < 0, so larger exponents give smaller nu
    lower_edge = (hi - params.c0) * le
    upper_edge = (lo + params.c0) * le
    lower_margin = ln - lower_edge
    upper_margin = upper_edge - ln
    empty = lower_edge > upper_edge
    in_band = (not empty) and lower_margin >= 0 and upper_margin >= 0

    boundary = None
    scale = max(1.0, abs(ln))
    alternatives = {
        f"nu = c1 eps^{lo:g}": math.log(params.c1) + lo * le,
        f"nu = eps^{hi:g} / c1": hi * le - math.log(params.c1),
        f"beta = {lo:g}": lo * le,
        f"beta = {hi:g}": hi * le,
    }
    if not in_band:
        for name, target in alternatives.items():
            if abs(ln - target) <= _EXP_TOL * scale:
                boundary = name
                break
    return RegimeReport(which, in_band or boundary is not None, params.beta,
                        lower_margin, upper_margin, boundary, empty)


# -- frame maps ------------------------------------------------------------------------


class Fields(NamedTuple):
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    phi: np.ndarray


def scaled_coordinates(epsilon: float, t_lab: float, x_lab) -> tuple[float, np.ndarray]:
    """``(eps^(3/2) t, eps^(1/2) (x - t))``."""
    return epsilon**1.5 * t_lab, math.sqrt(epsilon) * (np.asarray(x_lab, float) - t_lab)


def to_lab_frame(grid: Grid1D, fields, epsilon: float, t_lab: float, x_lab) -> Fields:
    """
    Lab-frame moments at points ``x_lab`` and time ``t_lab``.

    ``fields`` is ``(rho, u, theta, phi)`` sampled on ``grid`` at the scaled
    time ``eps^(3/2) t_lab``; off-grid values use the trigonometric
    interpolant (periodic wrap).
    """
    rho, u, theta, phi = fields
    _, xs = scaled_coordinates(epsilon, t_lab, x_lab)
    xs = np.mod(xs, grid.length)
    I = grid.interpolate
    return Fields(I(rho, xs), epsilon * I(u, xs), epsilon**2 * I(theta, xs), epsilon * I(phi, xs))


def lab_grid_for(grid: Grid1D, epsilon: float) -> Grid1D:
    """Lab grid covering one scaled period with the same number of points."""
    return Grid1D(grid.length / math.sqrt(epsilon), grid.n)


def from_lab_frame(lab_grid: Grid1D, lab_fields, epsilon: float, t_lab: float, grid: Grid1D) -> Fields:
    """
    Inverse of :func:`to_lab_frame`: lab moments sampled on ``lab_grid``
    (period ``grid.length / sqrt(eps)``) mapped back onto the scaled ``grid``.
    """
    if not math.isclose(lab_grid.length * math.sqrt(epsilon), grid.length, rel_tol=1e-12):
        raise ValueError("lab grid period does not match the scaled box")
    rho, u, theta, phi = lab_fields
    xl = np.mod(grid.x / math.sqrt(epsilon) + t_lab, lab_grid.length)
    I = lab_grid.interpolate
    return Fields(I(rho, xl), I(u, xl) / epsilon, I(theta, xl) / epsilon**2, I(phi, xl) / epsilon)
