"""
Periodic Fourier machinery shared by every solver in the package.

Transform convention: ``to_modes`` is the unnormalised forward DFT
(``numpy.fft.fft``) and ``to_values`` its exact inverse, so that
``to_values(to_modes(f)) == f``.  With this convention Parseval reads

    sum(f**2) * h == (h / n) * sum(|c_j|**2)

where ``h = L / n`` is the grid spacing.  Internally the real-to-complex
transform (``rfft``) is used; ``rwavenumbers`` is the matching table.

Grid points sit at ``x_j = j * h`` for ``j = 0..n-1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np


class TruncationWarning(UserWarning):
    """A quantity that should vanish on the real line is non-negligible on the box."""


class Norms(NamedTuple):
    l2: float
    linf: float
    mean: float


@dataclass(frozen=True)
class Grid1D:
    """
    Uniform periodic grid on ``[0, length)``.

    Parameters
    ----------
    length : float
        Box length ``L``.
    n : int
        Number of grid points; even and at least 8.
    """

    length: float
    n: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"grid length must be positive, got {self.length!r}")
        if int(self.n) != self.n or self.n % 2 != 0 or self.n < 8:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n!r}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_j = 2 pi j / L in numpy FFT ordering (Nyquist carries -n/2)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.spacing)

    @cached_property
    def rwavenumbers_odd(self) -> np.ndarray:
        # Nyquist zeroed: symmetric convention for odd-order derivatives.
        k = self.rwavenumbers.copy()
        k[-1] = 0.0
        return k

    @property
    def kmax(self) -> float:
        return np.pi * self.n / self.length

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask over rfft modes keeping |k| <= (2/3) kmax."""
        return self.rwavenumbers <= (2.0 / 3.0) * self.kmax * (1.0 + 1e-12)

    # -- transforms -------------------------------------------------------

    def to_modes(self, f: np.ndarray) -> np.ndarray:
        return np.fft.fft(f)

    def to_values(self, c: np.ndarray) -> np.ndarray:
        return np.fft.ifft(c).real

    def rfft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.rfft(f)

    def irfft(self, c: np.ndarray) -> np.ndarray:
        return np.fft.irfft(c, n=self.n)

    # -- operators --------------------------------------------------------

    def deriv_symbol(self, order: int) -> np.ndarray:
        """Multiplier ``(ik)**order`` over rfft modes."""
        k = self.rwavenumbers_odd if order % 2 else self.rwavenumbers
        return (1j * k) ** order

    def deriv(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        """Spectral derivative of order ``order`` (>= 1) along the last axis."""
        if order < 1:
            raise ValueError("derivative order must be >= 1")
        return self.irfft(self.deriv_symbol(order) * self.rfft(f))

    def antideriv_zero_mean(
        self, f: np.ndarray, mean_tol: float | None = 1e-8
    ) -> tuple[np.ndarray, float]:
        """
        Zero-mean antiderivative.

        Returns ``(g, m)`` with ``g' = f - m``, ``mean(g) = 0`` and ``m`` the
        mean of ``f``.  A non-decaying integrand (``|m| > mean_tol``) is
        reported with a :class:`TruncationWarning`.
        """
        c = self.rfft(f)
        m = float(c[0].real / self.n)
        k = self.rwavenumbers_odd
        out = np.zeros_like(c)
        nz = k != 0
        out[nz] = c[nz] / (1j * k[nz])
        if mean_tol is not None and abs(m) > mean_tol:
            warnings.warn(
                f"antiderivative integrand has mean {m:.3e} > {mean_tol:.1e}",
                TruncationWarning,
                stacklevel=2,
            )
        return self.irfft(out), m

    def dealias(self, m: np.ndarray) -> np.ndarray:
        """2/3-rule truncation of full-length mode coefficients."""
        keep = np.abs(self.wavenumbers) <= (2.0 / 3.0) * self.kmax * (1.0 + 1e-12)
        return np.where(keep, m, 0.0)

    def smooth_product(self, *factors: np.ndarray) -> np.ndarray:
        """Pointwise product with the 2/3 rule applied to inputs and result."""
        mask = self.dealias_mask
        out = None
        for f in factors:
            f = self.irfft(mask * self.rfft(f))
            out = f if out is None else out * f
        return self.irfft(mask * self.rfft(out))

    def norms(self, f: np.ndarray) -> Norms:
        f = np.asarray(f, dtype=float)
        return Norms(
            l2=float(np.sqrt(np.sum(f * f) * self.spacing)),
            linf=float(np.max(np.abs(f))),
            mean=float(np.sum(f) / self.n),
        )

    def l2(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.asarray(f) ** 2) * self.spacing))

    def interpolate(self, f: np.ndarray, points: np.ndarray) -> np.ndarray:
        """
        Evaluate the trigonometric interpolant of ``f`` at arbitrary points
        (periodic wrap).  The Nyquist mode is taken as a cosine.
        """
        c = self.rfft(f) / self.n
        k = self.rwavenumbers
        w = np.full(k.shape, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        points = np.asarray(points, dtype=float)
        # c[-1] is real for real input, so its real part is already the cosine
        phase = np.exp(1j * np.multiply.outer(points, k))
        return (phase * (w * c)).real.sum(axis=-1)


def make_grid(length: float, n: int) -> Grid1D:
    return Grid1D(float(length), int(n))


# -- exponential time differencing -------------------------------------------


def etdrk4_coefficients(z: np.ndarray, n_contour: int = 64):
    """
    ETDRK4 weights for ``z = dt * L`` (elementwise), using the mean over a
    circle of radius 1 around each ``z`` to avoid cancellation near zero.

    Returns ``(e, e2, q, f1, f2, f3)`` in units where the caller multiplies
    ``q, f1, f2, f3`` by ``dt``.
    """
    z = np.asarray(z, dtype=complex)
    roots = np.exp(2j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    lr = z[..., None] + roots
    elr = np.exp(lr)
    q = np.mean((np.exp(lr / 2) - 1.0) / lr, axis=-1)
    f1 = np.mean((-4.0 - lr + elr * (4.0 - 3.0 * lr + lr**2)) / lr**3, axis=-1)
    f2 = np.mean((2.0 + lr + elr * (lr - 2.0)) / lr**3, axis=-1)
    f3 = np.mean((-4.0 - 3.0 * lr - lr**2 + elr * (4.0 - lr)) / lr**3, axis=-1)
    return np.exp(z), np.exp(z / 2), q, f1, f2, f3


class ETDRK4:
    """
    Fourth-order exponential Runge-Kutta (Cox-Matthews / Kassam-Trefethen)
    for ``dy/dt = L * y + N(y)`` with ``L`` diagonal.

    ``linear`` may have any shape broadcastable against the state;
    ``nonlinear`` maps a state array to an array of the same shape.
    """

    def __init__(
        self,
        linear: np.ndarray,
        nonlinear: Callable[[np.ndarray], np.ndarray],
        dt: float,
        n_contour: int = 64,
    ):
        if not dt > 0:
            raise ValueError("time step must be positive")
        self.dt = float(dt)
        self.linear = np.asarray(linear)
        self.nonlinear = nonlinear
        e, e2, q, f1, f2, f3 = etdrk4_coefficients(self.dt * self.linear, n_contour)
        self.e, self.e2 = e, e2
        self.q = self.dt * q
        self.f1 = self.dt * f1
        self.f2 = self.dt * f2
        self.f3 = self.dt * f3

    def step(self, y: np.ndarray) -> np.ndarray:
        N = self.nonlinear
        na = N(y)
        a = self.e2 * y + self.q * na
        nb = N(a)
        b = self.e2 * y + self.q * nb
        nc = N(b)
        c = self.e2 * a + self.q * (2.0 * nc - na)
        nd = N(c)
        return self.e * y + self.f1 * na + 2.0 * self.f2 * (nb + nc) + self.f3 * nd
