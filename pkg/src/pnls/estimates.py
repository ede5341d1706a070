"""Empirical checks of decay rates and uniform bounds.

Every probe measures a quantity on a t-sweep and fits ``value ~ C t^{-exponent}``
by least squares in log-log coordinates.  Acceptance uses exponent windows only.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from .errors import DegenerateFitError, DomainError
from .grids import ComplexField, Grid1D, h_norms, l2_norm, spectral_derivative, trapezoid
from .perturbation import PerturbationSpec, f_functional, inner_grid
from .rhp import Matrix2Field, boundary_values, resolvent_norm, solve_mu
from .scattering import ReflectionData, reflection_coefficient, resample
from . import pde

log = logging.getLogger(__name__)

EXPONENT_WINDOW = 0.3
M_INF_SLOPE_MAX = 0.05


@dataclass(frozen=True)
class DecayFit:
    times: tuple
    values: tuple
    exponent: float
    r2: float
    target: float | None = None

    @property
    def prefactor(self) -> float:
        return float(np.exp(np.mean(np.log(self.values)) + self.exponent * np.mean(np.log(self.times))))

    def passes(self, window: float = EXPONENT_WINDOW) -> bool:
        return self.target is not None and abs(self.exponent - self.target) <= window


def fit_decay(times: Sequence[float], values: Sequence[float], target: float | None = None) -> DecayFit:
    """Fit ``values = C times^{-exponent}``; ``r2`` is the squared correlation."""
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    if t.size < 2 or t.size != v.size:
        raise DegenerateFitError("need at least two (t, value) pairs")
    if np.any(np.diff(t) <= 0) or np.any(t <= 0):
        raise DegenerateFitError("times must be positive and increasing")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise DegenerateFitError(f"nonpositive measured values: {v}")
    lt, lv = np.log(t), np.log(v)
    if t.size == 2:
        slope, r2 = (lv[1] - lv[0]) / (lt[1] - lt[0]), 1.0
    else:
        res = linregress(lt, lv)
        slope, r2 = res.slope, res.rvalue ** 2
    return DecayFit(tuple(t), tuple(v), float(-slope), float(min(max(r2, 0.0), 1.0)), target)


# --------------------------------------------------------------------------- #
# the weighted derivation applied to G
# --------------------------------------------------------------------------- #

def ltilde_g(q: ComplexField, q_x: ComplexField | None, spec: PerturbationSpec, t: float) -> Matrix2Field:
    """``L G`` with ``L = i x ad sigma - 2 t d/dx``: ``-i [[0, beta], [-conj(beta), 0]]`` where

    ``beta = a|q|^l D q + l a |q|^{l-2} q Re(conj(q) D q) + |q|^l q D a`` and
    ``D = i x - 2 t d/dx``.  ``q_x`` defaults to the spectral derivative.
    """
    x = q.grid.nodes
    qv = q.values
    qx = spectral_derivative(qv, q.grid) if q_x is None else q_x.values
    a = spec.profile_values(x)
    ax = spec.profile_derivative(x)
    l = spec.l
    aq = np.abs(qv)
    dq = 1j * x * qv - 2 * t * qx
    da = 1j * x * a - 2 * t * ax
    with np.errstate(divide="ignore", invalid="ignore"):
        lower = np.where(aq > 0, aq ** (l - 2), 0.0)
    beta = a * aq ** l * dq + l * a * lower * qv * np.real(np.conj(qv) * dq) + aq ** l * qv * da
    out = np.zeros((2, 2, x.size), complex)
    out[0, 1] = -1j * beta
    out[1, 0] = -1j * (-np.conj(beta))
    return Matrix2Field(q.grid, out)


def ltilde_g_norms(q: ComplexField, spec: PerturbationSpec, t: float) -> tuple[float, float]:
    """``(||L G||_{L^2}, ||L G||_{L^1})`` with the Frobenius norm pointwise."""
    lg = ltilde_g(q, None, spec, t).values
    pointwise = np.sqrt(np.sum(np.abs(lg) ** 2, axis=(0, 1)))
    l2 = l2_norm(pointwise, q.grid)
    l1 = float(np.real(trapezoid(pointwise, q.grid)))
    return l2, l1


# --------------------------------------------------------------------------- #
# probe configuration
# --------------------------------------------------------------------------- #

@dataclass
class ProbeConfig:
    """Inputs for :func:`decay_probe`.

    ``q0`` is ``amplitude * sech(x)``; the integrable flow is sampled at
    ``times``.  PDE settings apply to the L G probes, z-grid settings to the
    F probes.
    """

    amplitude: float = 0.3
    spec: PerturbationSpec = field(default_factory=lambda: PerturbationSpec(epsilon=0.0, l=4))
    times: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    pde_dx: float = 0.2
    pde_dt: float = 0.005
    pde_zmax: float = 9.0
    zmax: float = 8.0
    min_nz: int = 512
    inner_count: int = 128
    delta_amplitude: float = 0.02
    p: float = 2.0

    def q0(self, grid: Grid1D) -> ComplexField:
        return ComplexField.from_function(grid, lambda x: self.amplitude / np.cosh(np.clip(x, -700, 700)))


TARGETS = {
    "LG_l2": lambda l, p: (l - 1) / 2,
    "LG_l1": lambda l, p: (l - 1) / 2,
    "F_h11": lambda l, p: l / 2 - 0.5,
    "DeltaF_h11": lambda l, p: l / 2 + 1 / (2 * p) - 0.75,
}


def target_exponent(quantity: str, l: float, p: float = 2.0) -> float:
    return TARGETS[quantity](l, p)


def _pde_states(cfg: ProbeConfig, times) -> dict:
    """Integrable PDE solution at each requested time, on one periodic domain."""
    tmax = max(times)
    half = 2 * tmax * cfg.pde_zmax + 40
    n = int(2 ** math.ceil(math.log2(2 * half / cfg.pde_dx)))
    grid = Grid1D(-n * cfg.pde_dx / 2, cfg.pde_dx, n)
    state = pde.PdeState.initial(cfg.q0(grid))
    spec0 = cfg.spec.with_epsilon(0.0)
    out = {}
    t_prev = 0.0
    for t in sorted(times):
        state = pde.run(state, spec0, t - t_prev, cfg.pde_dt, trace_every=1000)
        out[t] = state
        t_prev = t
    return out


def z_grid_for(zmax: float, t: float, xmax: float = 8.0, safety: float = 1.5,
               min_nz: int = 512) -> Grid1D:
    """Symmetric z-grid resolving ``e^{i(xz - tz^2)}`` for ``|x| <= xmax`` at time ``t``.

    Node count is ``safety`` times the Nyquist count, rounded up to a multiple of 256.
    """
    bandwidth = 2 * abs(t) * zmax + abs(xmax)
    n = 2 * zmax * bandwidth * safety / np.pi
    n = max(min_nz, 256 * math.ceil(n / 256))
    return Grid1D.from_bounds(-zmax, zmax, n)


def _initial_r(cfg: ProbeConfig, zgrid: Grid1D, amplitude: float | None = None) -> ReflectionData:
    xg = Grid1D.from_bounds(-30, 30, 4096)
    amp = cfg.amplitude if amplitude is None else amplitude
    q0 = ComplexField.from_function(xg, lambda x: amp / np.cosh(np.clip(x, -700, 700)))
    return reflection_coefficient(q0, zgrid)


def decay_probe(quantity: str, cfg: ProbeConfig | None = None) -> DecayFit:
    """Measure ``quantity`` on the dyadic sweep ``cfg.times`` and fit its decay exponent.

    ``LG_l2`` / ``LG_l1``: norms of ``L G`` along the integrable flow (split-step
    solution).  ``F_h11``: ``||F(t, r0)||_{H^{1,1}}``.  ``DeltaF_h11``: the same
    for ``F(t, r2) - F(t, r1)`` with ``r1, r2`` from nearby sech amplitudes.
    """
    cfg = cfg or ProbeConfig()
    if quantity not in TARGETS:
        raise DomainError(f"unknown quantity {quantity!r}")
    times = tuple(float(t) for t in cfg.times)
    target = target_exponent(quantity, cfg.spec.l, cfg.p)
    values = []
    if quantity.startswith("LG"):
        states = _pde_states(cfg, times)
        for t in times:
            l2, l1 = ltilde_g_norms(states[t].q, cfg.spec, t)
            values.append(l2 if quantity == "LG_l2" else l1)
    else:
        zg = z_grid_for(cfg.zmax, max(times), min_nz=cfg.min_nz)
        r1 = _initial_r(cfg, zg)
        ig = inner_grid(cfg.spec, qmax=cfg.amplitude, count=cfg.inner_count)
        r2 = _initial_r(cfg, zg, cfg.amplitude * (1 + cfg.delta_amplitude)) if quantity == "DeltaF_h11" else None
        for t in times:
            f1 = f_functional(t, r1, cfg.spec, ig).F
            if r2 is None:
                values.append(h_norms(f1).h11)
            else:
                f2 = f_functional(t, r2, cfg.spec, ig).F
                values.append(h_norms(f2.with_values(f2.values - f1.values)).h11)
    return fit_decay(times, values, target)


# --------------------------------------------------------------------------- #
# uniform bound on m_+
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class MInfinityProbe:
    times: tuple
    per_time_max: tuple
    m_infinity: float
    slope: float

    def passes(self, limit: float = M_INF_SLOPE_MAX) -> bool:
        return self.slope <= limit and self.m_infinity >= 1.0 - 1e-12


def m_infinity_probe(r: ReflectionData, times: Sequence[float] = (1, 4, 16, 64),
                     x_factors: Sequence[float] = (0.0, 2.0, 4.0),
                     zgrid_for_t=None) -> MInfinityProbe:
    """``max sup_z |m_+(z; x, t)|`` (largest entry modulus) over ``x = c t`` for
    ``c`` in ``x_factors``, per time, with the log-log slope against ``t``.

    ``zgrid_for_t(t)`` optionally returns a refined z-grid for time ``t``; ``r``
    is then spline-interpolated onto it (zero outside its grid).
    """
    if not r.rho < 1:
        raise DomainError("sup|r| >= 1")
    per_t = []
    for t in times:
        rt = r
        if zgrid_for_t is not None:
            rt = resample(r, zgrid_for_t(t))
        best = 0.0
        for c in x_factors:
            sol = solve_mu(rt, c * t, t)
            mp, _ = boundary_values(sol)
            best = max(best, mp.sup_entry())
        per_t.append(best)
    per_t = np.asarray(per_t)
    slope = float(linregress(np.log(times), np.log(per_t)).slope) if len(times) > 2 else float(
        np.log(per_t[-1] / per_t[0]) / np.log(times[-1] / times[0]))
    return MInfinityProbe(tuple(times), tuple(per_t), float(per_t.max()), slope)


# --------------------------------------------------------------------------- #
# resolvent bound over a standard case set
# --------------------------------------------------------------------------- #

STANDARD_RESOLVENT_CASES = tuple(
    (amp, x, t) for amp in (0.1, 0.3, 0.5) for (x, t) in ((0.0, 0.0), (2.0, 0.0), (0.0, 1.0), (3.0, 1.0), (-4.0, 2.0))
)


@dataclass(frozen=True)
class ResolventCase:
    amplitude: float
    x: float
    t: float
    norm: float
    bound: float
    m_infinity: float
    rho: float

    @property
    def passes(self) -> bool:
        return 1.0 - 1e-8 <= self.norm <= self.bound


def resolvent_suite(cases=STANDARD_RESOLVENT_CASES, zgrid: Grid1D | None = None) -> list[ResolventCase]:
    zgrid = zgrid or Grid1D.from_bounds(-8, 8, 512)
    xg = Grid1D.from_bounds(-30, 30, 4096)
    cache = {}
    out = []
    for amp, x, t in cases:
        if amp not in cache:
            q0 = ComplexField.from_function(xg, lambda s: amp / np.cosh(np.clip(s, -700, 700)))
            cache[amp] = reflection_coefficient(q0, zgrid)
        r = cache[amp]
        est = resolvent_norm(r, x, t)
        out.append(ResolventCase(amp, x, t, est.norm, est.bound, est.m_infinity, est.rho))
    return out
