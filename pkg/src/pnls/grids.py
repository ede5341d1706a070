"""Uniform grids, complex fields, discrete norms and quadrature primitives.

Everything downstream samples functions on a :class:`Grid1D` and wraps the
samples in a :class:`ComplexField`.  Integrals are trapezoid sums; derivatives
are spectral (FFT) and assume the field is negligible at the grid edges.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import DomainError, InvalidFieldError

log = logging.getLogger(__name__)

#: edge magnitude above which a field is reported as not decaying
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    origin: float
    spacing: float
    count: int

    def __post_init__(self):
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise DomainError(f"grid spacing must be positive, got {self.spacing}")
        if int(self.count) != self.count or self.count < 2:
            raise DomainError(f"grid needs at least 2 nodes, got {self.count}")
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_bounds(cls, lo: float, hi: float, count: int) -> "Grid1D":
        """Grid with ``count`` nodes, first at ``lo`` and last at ``hi``."""
        if not hi > lo:
            raise DomainError(f"empty interval [{lo}, {hi}]")
        return cls(lo, (hi - lo) / (count - 1), count)

    def node(self, i: int) -> float:
        # computed from the index so there is no accumulated drift
        return self.origin + i * self.spacing

    @property
    def nodes(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.count)

    @property
    def end(self) -> float:
        return self.node(self.count - 1)

    @property
    def length(self) -> float:
        return self.end - self.origin

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.count, d=self.spacing)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.count, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


@dataclass(frozen=True)
class ComplexField:
    """Complex samples of a function, one per grid node (immutable)."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        if v.shape[0] != self.grid.count:
            raise InvalidFieldError(
                f"field has {v.shape[0]} samples but grid has {self.grid.count} nodes")
        if not np.all(np.isfinite(v)):
            raise InvalidFieldError("field contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid1D, func) -> "ComplexField":
        return cls(grid, func(grid.nodes))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "ComplexField":
        return cls(grid, np.zeros(grid.count))

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values)

    def __len__(self):
        return self.grid.count

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def edge_magnitude(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def interpolator(self):
        """Cubic-spline interpolant returning complex values."""
        x = self.grid.nodes
        re = CubicSpline(x, self.values.real)
        im = CubicSpline(x, self.values.imag)
        return lambda s: re(s) + 1j * im(s)


@dataclass(frozen=True)
class SobolevNorms:
    """Discrete norms of a field.

    ``h11`` is ``sqrt(l2**2 + weighted_l2**2 + deriv_l2**2)``.  The weight
    ``(1 + |x|)`` norm is equivalent: ``h11 <= ||(1+|x|) f|| + ||f'|| <= 2 h11``.
    """

    l2: float
    weighted_l2: float
    deriv_l2: float
    h11: float


def check_edges(f: ComplexField, what: str = "field", tol: float = EDGE_TOL) -> bool:
    """Log a warning when ``f`` is not negligible at the grid edges."""
    edge = f.edge_magnitude()
    if edge > tol:
        log.warning("%s is %.3g at the grid edge (expected < %.1g)", what, edge, tol)
        return False
    return True


def trapezoid(values: np.ndarray, grid: Grid1D) -> complex:
    return np.sum(np.asarray(values) * grid.trapezoid_weights(), axis=-1)


def l2_norm(values: np.ndarray, grid: Grid1D) -> float:
    mod = np.abs(values)
    top = float(np.max(mod)) if mod.size else 0.0
    if top == 0.0 or not math.isfinite(top):
        return top
    # scale first so tiny or huge fields neither underflow nor overflow
    return top * float(np.sqrt(np.real(trapezoid((mod / top) ** 2, grid))))


def spectral_derivative(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    k = grid.wavenumbers()
    if grid.count % 2 == 0:
        k[grid.count // 2] = 0.0  # Nyquist mode has no odd-symmetric derivative
    return np.fft.ifft(1j * k * np.fft.fft(values, axis=-1), axis=-1)


def h_norms(f: ComplexField) -> SobolevNorms:
    """Discrete L2, weighted L2, derivative L2 and H^{1,1} norms of ``f``."""
    if not np.all(np.isfinite(f.values)):
        raise InvalidFieldError("non-finite field")
    g = f.grid
    l2 = l2_norm(f.values, g)
    wl2 = l2_norm(g.nodes * f.values, g)
    dl2 = l2_norm(spectral_derivative(f.values, g), g)
    return SobolevNorms(l2, wl2, dl2, math.sqrt(l2 ** 2 + wl2 ** 2 + dl2 ** 2))


def h11_norm(values: np.ndarray, grid: Grid1D) -> float:
    return h_norms(ComplexField(grid, values)).h11


def frequency_grid(grid: Grid1D) -> Grid1D:
    n = grid.count
    dk = 2 * np.pi / (n * grid.spacing)
    return Grid1D(-(n // 2) * dk, dk, n)


def forward_transform(f: ComplexField) -> ComplexField:
    """Unitary Fourier transform ``(2 pi)^{-1/2} int f(x) e^{-ikx} dx`` sampled on
    the centred frequency grid (Riemann sum, so Parseval holds exactly)."""
    g = f.grid
    kg = frequency_grid(g)
    n = g.count
    spec = np.fft.fftshift(np.fft.fft(f.values))
    k = kg.nodes
    vals = g.spacing / math.sqrt(2 * np.pi) * spec * np.exp(-1j * k * g.origin)
    return ComplexField(kg, vals)


def inverse_transform(fhat: ComplexField, origin: float) -> ComplexField:
    """Inverse of :func:`forward_transform` onto the grid starting at ``origin``."""
    kg = fhat.grid
    n = kg.count
    h = 2 * np.pi / (n * kg.spacing)
    k = kg.nodes
    spec = fhat.values * np.exp(1j * k * origin) * math.sqrt(2 * np.pi) / h
    return ComplexField(Grid1D(origin, h, n), np.fft.ifft(np.fft.ifftshift(spec)))


def pv_integral(samples: ComplexField, singularity: float) -> complex:
    """Principal value of ``int f(z) / (z - z0) dz`` over the grid interval.

    The smooth part ``(f(z) - f(z0)) / (z - z0)`` is integrated with composite
    Simpson; the subtracted piece contributes ``f(z0) log((b - z0)/(z0 - a))``.
    """
    g = samples.grid
    a, b = g.origin, g.end
    z0 = float(singularity)
    if not (a < z0 < b):
        raise DomainError(f"singularity {z0} is not inside ({a}, {b})")
    z = g.nodes
    f = samples.values
    interp = samples.interpolator()
    re_spl = CubicSpline(z, f.real)
    im_spl = CubicSpline(z, f.imag)
    f0 = complex(interp(z0))
    df0 = complex(re_spl(z0, 1) + 1j * im_spl(z0, 1))
    d = z - z0
    close = np.abs(d) < 1e-9 * g.spacing
    smooth = np.empty_like(f)
    smooth[~close] = (f[~close] - f0) / d[~close]
    smooth[close] = df0
    return complex(simpson(smooth, dx=g.spacing) + f0 * math.log((b - z0) / (z0 - a)))
