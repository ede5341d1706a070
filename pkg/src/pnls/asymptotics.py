"""Linear evolution of ``r``, the scalar function ``delta`` and the long-time profile.

For ``t -> infinity`` the solution behaves like::

    q_as(x, t) = t^{-1/2} alpha(z0) exp(i x^2 / (4t) - i nu(z0) log(2t)),   z0 = x / (2t)
    nu = -log(1 - |r(z0)|^2) / (2 pi),   |alpha|^2 = nu / 2
    arg alpha = (1/pi) int_{-inf}^{z0} log(z0 - z) d log(1 - |r(z)|^2)
                + pi/4 + arg Gamma(i nu) + arg r(z0)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline
from scipy.special import loggamma

from .errors import DomainError
from .grids import ComplexField, Grid1D, pv_integral
from .scattering import ReflectionData

T_MIN = 1.0


def evolve_linear(r0: ReflectionData, t: float) -> ReflectionData:
    """``r(z) e^{-i t z^2}``: the reflection coefficient of the integrable flow at time t."""
    if t == 0:
        return r0
    z = r0.grid.nodes
    return ReflectionData.from_field(r0.r.with_values(r0.values * np.exp(-1j * t * z * z)))


def log_gamma_arg(nu: float) -> float:
    """Principal value of ``arg Gamma(i nu)`` for ``nu >= 0``; ``-pi/2`` at ``nu = 0``."""
    if not (nu >= 0 and math.isfinite(nu)):
        raise DomainError(f"nu must be finite and nonnegative, got {nu}")
    if nu == 0:
        return -math.pi / 2
    return _wrap(float(np.imag(loggamma(1j * nu))))


def _wrap(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


class _LogOneMinus:
    """Spline of ``L(z) = log(1 - |r(z)|^2)`` and its derivative."""

    def __init__(self, r: ReflectionData):
        if not r.rho < 1:
            raise DomainError(f"sup|r| = {r.rho} >= 1")
        z = r.grid.nodes
        self.a, self.b = z[0], z[-1]
        self.spline = CubicSpline(z, np.log1p(-np.abs(r.values) ** 2))
        self.deriv = self.spline.derivative()

    def __call__(self, s):
        s = np.asarray(s)
        return np.where((s >= self.a) & (s <= self.b), self.spline(s), 0.0)


def _quad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-12, **kw)[0]


def phase_integral(r: ReflectionData, z0: float) -> float:
    """``int_{-inf}^{z0} log(z0 - z) d(log(1 - |r(z)|^2))``.

    Uses the spline derivative of ``log(1 - |r|^2)`` and a log-weighted
    Gauss-Kronrod rule for the endpoint singularity.
    """
    lg = _LogOneMinus(r)
    return _phase_integral(lg, z0)


def _phase_integral(lg: _LogOneMinus, z0: float) -> float:
    if z0 <= lg.a:
        return 0.0
    if z0 <= lg.b:
        return _quad(lg.deriv, lg.a, z0, weight="alg-logb", wvar=(0.0, 0.0))
    return _quad(lambda s: math.log(z0 - s) * lg.deriv(s), lg.a, lg.b)


@dataclass(frozen=True)
class AsymptoticProfile:
    z0: float
    nu: float
    alpha: complex
    qas: complex
    degenerate: bool = False


def _profile(rz: complex, lg: _LogOneMinus, x: float, t: float, integral=None) -> AsymptoticProfile:
    z0 = x / (2 * t)
    mod = abs(rz)
    if mod == 0.0:
        return AsymptoticProfile(z0, 0.0, 0j, 0j, True)
    nu = -math.log1p(-mod * mod) / (2 * math.pi)
    if integral is None:
        integral = _phase_integral(lg, z0)
    arg = integral / math.pi + math.pi / 4 + log_gamma_arg(nu) + math.atan2(rz.imag, rz.real)
    alpha = math.sqrt(nu / 2) * complex(math.cos(arg), math.sin(arg))
    qas = t ** -0.5 * alpha * np.exp(1j * (x * x / (4 * t) - nu * math.log(2 * t)))
    return AsymptoticProfile(z0, nu, alpha, complex(qas))


def _check_t(t: float, t_min: float) -> None:
    if t < t_min:
        raise DomainError(f"t = {t} is below t_min = {t_min}")


def asymptotic_profile(r: ReflectionData, x: float, t: float, t_min: float = T_MIN) -> AsymptoticProfile:
    """Leading long-time term at ``(x, t)``; ``r`` may be ``r(t)`` or ``r_infinity``."""
    _check_t(t, t_min)
    lg = _LogOneMinus(r)
    z0 = x / (2 * t)
    g = r.grid
    rz = complex(r.r.interpolator()(z0)) if g.origin <= z0 <= g.end else 0j
    return _profile(rz, lg, x, t)


def asymptotic_profile_on_grid(r: ReflectionData, xs, t: float, t_min: float = T_MIN) -> np.ndarray:
    """Vectorised ``q_as`` at the points ``xs``.

    The phase integral is smooth in ``z0``; it is tabulated on the z-grid
    nodes and spline-interpolated.
    """
    _check_t(t, t_min)
    xs = np.asarray(xs, dtype=float)
    lg = _LogOneMinus(r)
    g = r.grid
    nodes = g.nodes
    table = np.array([_phase_integral(lg, z) for z in nodes])
    ispl = CubicSpline(nodes, table)
    interp = r.r.interpolator()
    out = np.zeros(xs.size, complex)
    for i, x in enumerate(xs):
        z0 = x / (2 * t)
        if not (g.origin <= z0 <= g.end):
            continue
        prof = _profile(complex(interp(z0)), lg, x, t, float(ispl(z0)))
        out[i] = prof.qas
    return out


def delta_fn(r: ReflectionData, z0: float, z: complex, side: str | None = None) -> complex:
    """``delta(z) = exp((1/(2 pi i)) int_{-inf}^{z0} log(1 - |r(s)|^2) / (s - z) ds)``.

    Off the real axis the integral is evaluated directly.  On the cut
    ``z < z0`` pass ``side='+'`` or ``side='-'`` for the boundary values
    ``exp(PV / (2 pi i) +- log(1 - |r(z)|^2) / 2)``.
    """
    if not r.rho < 1:
        raise DomainError(f"sup|r| = {r.rho} >= 1")
    lg = _LogOneMinus(r)
    z = complex(z)
    a = lg.a
    if z0 <= a:
        return 1.0 + 0j
    upper = min(z0, lg.b)
    if z.imag != 0.0:
        # subtract L(Re z) so the integrand stays bounded as Im z -> 0
        zr = z.real
        l0 = float(lg(zr))

        def re_part(s):
            return float(np.real((lg.spline(s) - l0) / (s - z)))

        def im_part(s):
            return float(np.imag((lg.spline(s) - l0) / (s - z)))

        pts = [zr] if a < zr < upper else None
        integral = _quad(re_part, a, upper, points=pts) + 1j * _quad(im_part, a, upper, points=pts)
        # the segment [a, upper] - z stays in one open half-plane: principal logs are continuous
        integral += l0 * (np.log(upper - z) - np.log(a - z))
        return complex(np.exp(integral / (2j * math.pi)))
    x = z.real
    if x < upper and x > a:
        if side not in ("+", "-"):
            raise DomainError("z lies on the cut; choose side='+' or side='-'")
        n = max(2001, int((upper - a) / r.grid.spacing) * 4 + 1)
        sub = Grid1D.from_bounds(a, upper, n)
        pv = pv_integral(ComplexField(sub, lg.spline(sub.nodes)), x)
        half = 0.5 * float(lg.spline(x)) * (1 if side == "+" else -1)
        return complex(np.exp(pv / (2j * math.pi) + half))
    if x == upper:
        raise DomainError("delta is singular at z = z0")
    integral = _quad(lambda s: lg.spline(s) / (s - x), a, upper)
    return complex(np.exp(integral / (2j * math.pi)))
