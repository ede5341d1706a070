"""The localized perturbation ``G`` and the evolution of the reflection coefficient.

The perturbed equation ``i q_t + q_xx - 2|q|^2 q - eps a(x) |q|^l q = 0`` keeps
``r(t)(z) = e^{i t z^2} R(q(t))(z)`` slowly varying:

    dr/dt = eps F(t, r),
    F(z) = int e^{-i(yz - tz^2)} [m_-^{-1} G m_-]_12 (y, z) dy,
    G = -i a |q|^l [[0, q], [-conj(q), 0]].

``q(y)`` and ``m_-(z; y)`` both come out of one RHP solve per quadrature node
``y`` with reflection coefficient ``r(t)`` and phase ``yz - tz^2``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, FEvaluationError, InstabilityError, ISTError
from .grids import ComplexField, Grid1D, h_norms
from .rhp import DEFAULT_TOL, Matrix2Field, boundary_values, reconstruct, solve_mu
from .scattering import ReflectionData, resample

log = logging.getLogger(__name__)

PROFILE_EDGE_TOL = 1e-10
DEFAULT_L = 4.0
DEFAULT_EPSILON = 1e-3
INNER_NODES = 256


@dataclass(frozen=True)
class PerturbationSpec:
    """``eps``, the power ``l`` and the localized weight ``a(x)``.

    ``profile`` is ``'gaussian'`` (``exp(-(x/scale)^2)``), ``'sech2'``
    (``sech(x/scale)^2``) or ``'custom'`` with real samples in ``samples``
    (zero outside their grid).
    """

    epsilon: float = DEFAULT_EPSILON
    l: float = DEFAULT_L
    profile: str = "gaussian"
    scale: float = 1.0
    amplitude: float = 1.0
    samples: ComplexField | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.l > 3:
            raise DomainError(f"l must exceed 3, got {self.l}")
        if self.profile not in ("gaussian", "sech2", "custom"):
            raise DomainError(f"unknown profile {self.profile!r}")
        if self.profile == "custom":
            if self.samples is None:
                raise DomainError("custom profile needs samples")
            if self.samples.edge_magnitude() >= PROFILE_EDGE_TOL:
                raise DomainError("custom profile does not decay at its grid edges")
        elif not self.scale > 0:
            raise DomainError("profile scale must be positive")

    @classmethod
    def parse_profile(cls, text: str, **kw) -> "PerturbationSpec":
        """Build from a CLI string such as ``'gaussian:1.0'``, ``'sech2:2'`` or
        ``'custom:a.csv'`` (a field file whose real part is ``a``)."""
        name, _, arg = text.partition(":")
        if name == "custom":
            from .fieldio import read_field

            return cls(profile=name, samples=read_field(arg), **kw)
        return cls(profile=name, scale=float(arg) if arg else 1.0, **kw)

    def with_epsilon(self, epsilon: float) -> "PerturbationSpec":
        return PerturbationSpec(epsilon, self.l, self.profile, self.scale, self.amplitude, self.samples)

    def scaled(self, factor: float) -> "PerturbationSpec":
        return PerturbationSpec(self.epsilon, self.l, self.profile, self.scale,
                                self.amplitude * factor, self.samples)

    def profile_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.profile == "gaussian":
            return self.amplitude * np.exp(-(x / self.scale) ** 2)
        if self.profile == "sech2":
            return self.amplitude / np.cosh(np.clip(x / self.scale, -700, 700)) ** 2
        g = self.samples.grid
        vals = np.interp(x, g.nodes, self.samples.values.real, left=0.0, right=0.0)
        return self.amplitude * vals

    def profile_derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.profile == "gaussian":
            return -2 * x / self.scale ** 2 * self.profile_values(x)
        if self.profile == "sech2":
            u = np.clip(x / self.scale, -700, 700)
            return -2 * self.amplitude * np.tanh(u) / np.cosh(u) ** 2 / self.scale
        g = self.samples.grid
        d = np.gradient(self.samples.values.real, g.spacing)
        return self.amplitude * np.interp(x, g.nodes, d, left=0.0, right=0.0)

    def support_radius(self, threshold: float = 1e-12) -> float:
        """Half-width outside of which ``a(x) < threshold * amplitude``."""
        if self.profile == "gaussian":
            return self.scale * math.sqrt(math.log(1 / threshold))
        if self.profile == "sech2":
            return self.scale * 0.5 * math.log(4 / threshold)
        g = self.samples.grid
        return max(abs(g.origin), abs(g.end))


def g_term(q: ComplexField, spec: PerturbationSpec) -> Matrix2Field:
    """``G(x) = -i a(x) |q|^l [[0, q], [-conj(q), 0]]`` on the grid of ``q``."""
    a = spec.profile_values(q.grid.nodes)
    qv = q.values
    s = a * np.abs(qv) ** spec.l
    g = np.zeros((2, 2, qv.size), complex)
    g[0, 1] = -1j * s * qv
    g[1, 0] = 1j * s * np.conj(qv)
    return Matrix2Field(q.grid, g)


def inner_grid(spec: PerturbationSpec, qmax: float = 1.0, count: int = INNER_NODES) -> Grid1D:
    """Quadrature grid for the y-integral: where ``a(y) |q|^{l+1} >= 1e-12``."""
    floor = 1e-12 / max(qmax, 1e-300) ** (spec.l + 1)
    radius = spec.support_radius(min(floor / spec.amplitude, 0.5))
    return Grid1D.from_bounds(-radius, radius, count)


@dataclass(frozen=True)
class FEvaluation:
    F: ComplexField
    q: ComplexField  # potential reconstructed on the inner grid


def f_functional(t: float, r: ReflectionData, spec: PerturbationSpec, xgrid: Grid1D,
                 tol: float = DEFAULT_TOL) -> FEvaluation:
    """``F(t, r)`` on the z-grid of ``r``; independent of ``spec.epsilon``."""
    zg = r.grid
    z = zg.nodes
    ys = xgrid.nodes
    a = spec.profile_values(ys)
    wy = xgrid.trapezoid_weights()
    qs = np.zeros(ys.size, complex)
    acc = np.zeros(zg.count, complex)
    if not np.any(r.values):
        return FEvaluation(ComplexField.zeros(zg), ComplexField.zeros(xgrid))
    for i, y in enumerate(ys):
        try:
            sol = solve_mu(r, y, t, tol)
        except ISTError as exc:
            raise FEvaluationError(f"inner RHP solve failed: {exc}", t, y) from exc
        qy = reconstruct(sol)
        qs[i] = qy
        s = a[i] * abs(qy) ** spec.l
        if s == 0.0:
            continue
        g12 = -1j * s * qy
        g21 = 1j * s * np.conj(qy)
        _, mm = boundary_values(sol)
        m = mm.values
        # (m^{-1} G m)_12 with det m = 1
        conj12 = m[1, 1] ** 2 * g12 - m[0, 1] ** 2 * g21
        acc += wy[i] * np.exp(-1j * (y * z - t * z * z)) * conj12
    return FEvaluation(ComplexField(zg, acc), ComplexField(xgrid, qs))


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    h11_norms: list = field(default_factory=list)
    sup_norms: list = field(default_factory=list)
    f_norm_log: list = field(default_factory=list)
    rho0: float = 0.0
    eta0: float = 0.0

    def append(self, t: float, r: ReflectionData, f_h11: float) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase")
        self.times.append(float(t))
        self.snapshots.append(r)
        self.h11_norms.append(r.eta)
        self.sup_norms.append(r.rho)
        self.f_norm_log.append(float(f_h11))

    def at(self, t: float) -> ReflectionData:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t = {t}")
        return self.snapshots[i]

    @property
    def sup_bound(self) -> float:
        return (1 + self.rho0) / 2

    @property
    def h11_bound(self) -> float:
        return 2 * self.eta0

    def bounds_hold(self) -> bool:
        return all(s < self.sup_bound for s in self.sup_norms) and all(
            h < self.h11_bound for h in self.h11_norms)


def evolve_perturbed(r0: ReflectionData, spec: PerturbationSpec, T: float, steps: int,
                     xgrid: Grid1D | None = None, record_every: int = 1,
                     sup_margin: float = 0.0, tol: float = DEFAULT_TOL,
                     progress: Callable[[int, float], None] | None = None,
                     t0: float = 0.0, bounds: tuple[float, float] | None = None) -> TrajectoryRecord:
    """Classical RK4 for ``dr/dt = eps F(t, r)`` with ``steps`` equal steps on ``[t0, t0 + T]``.

    ``bounds = (rho0, eta0)`` overrides the reference norms when continuing a
    run from a later start time.  Aborts with :class:`InstabilityError` once ``sup|r|`` reaches
    ``(1 + rho0)/2 + sup_margin`` or the H^{1,1} norm reaches ``2 eta0``.
    """
    if steps < 1:
        raise DomainError("steps must be positive")
    if xgrid is None:
        xgrid = inner_grid(spec)
    rho0, eta0 = bounds if bounds is not None else (r0.rho, r0.eta)
    traj = TrajectoryRecord(rho0=rho0, eta0=eta0)
    traj.append(t0, r0, 0.0)
    h = T / steps
    zg = r0.grid
    r = r0.values
    eps = spec.epsilon

    def rhs(t, vals):
        if eps == 0:
            return np.zeros_like(vals), 0.0
        rd = ReflectionData.from_field(ComplexField(zg, vals), check_defocusing=True)
        fv = f_functional(t, rd, spec, xgrid, tol).F
        return eps * fv.values, h_norms(fv).h11

    for k in range(steps):
        t = t0 + k * h
        k1, fnorm = rhs(t, r)
        k2, _ = rhs(t + h / 2, r + h / 2 * k1)
        k3, _ = rhs(t + h / 2, r + h / 2 * k2)
        k4, _ = rhs(t + h, r + h * k3)
        r = r + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        tn = t0 + (k + 1) * h
        rd = ReflectionData.from_field(ComplexField(zg, r), check_defocusing=False)
        if (k + 1) % record_every == 0 or k + 1 == steps:
            traj.append(tn, rd, fnorm)
        if rd.rho >= traj.sup_bound + sup_margin or rd.eta >= traj.h11_bound:
            if traj.times[-1] != tn:
                traj.append(tn, rd, fnorm)
            raise InstabilityError(
                f"bounds violated at t={tn:g}: sup|r|={rd.rho:.6g} (limit {traj.sup_bound:.6g}), "
                f"H11={rd.eta:.6g} (limit {traj.h11_bound:.6g})", traj)
        if progress is not None:
            progress(k + 1, tn)
    return traj


def evolve_dyadic(r0: ReflectionData, spec: PerturbationSpec, t_end: float, base: float = 1.0,
                  step: float = 0.125, zgrid_for_t: Callable[[float], Grid1D] | None = None,
                  xgrid: Grid1D | None = None, tol: float = DEFAULT_TOL,
                  progress: Callable[[int, float], None] | None = None) -> TrajectoryRecord:
    """RK4 over the stages ``[0, base], [base, 2 base], ...`` up to ``t_end``.

    Every stage starts from the previous end state resampled onto
    ``zgrid_for_t(stage_end)``, so the z-resolution can follow the growing
    phase ``t z^2``.  The step is ``step`` (rounded so each stage has an integer
    number of steps).  Bounds are monitored against the initial norms.
    """
    edges = [0.0, base]
    while edges[-1] < t_end * (1 - 1e-12):
        edges.append(edges[-1] * 2)
    if abs(edges[-1] - t_end) > 1e-9 * t_end:
        raise DomainError("t_end must be base times a power of two")
    full = TrajectoryRecord(rho0=r0.rho, eta0=r0.eta)
    r = r0
    done = 0
    for a, b in zip(edges[:-1], edges[1:]):
        if zgrid_for_t is not None:
            r = resample(r, zgrid_for_t(b))
        n = max(1, int(round((b - a) / step)))
        cb = None if progress is None else (lambda k, t, d=done: progress(d + k, t))
        try:
            part = evolve_perturbed(r, spec, b - a, n, xgrid, tol=tol, progress=cb,
                                    t0=a, bounds=(r0.rho, r0.eta))
        except InstabilityError as exc:
            _merge(full, exc.trajectory)
            raise InstabilityError(str(exc), full) from exc
        _merge(full, part)
        r = full.snapshots[-1]
        done += n
    return full


def _merge(into: TrajectoryRecord, part: TrajectoryRecord) -> None:
    for t, snap, f in zip(part.times, part.snapshots, part.f_norm_log):
        if into.times and t <= into.times[-1]:
            continue
        into.append(t, snap, f)


def picard_solve(r0: ReflectionData, spec: PerturbationSpec, T: float, steps: int,
                 xgrid: Grid1D | None = None, tol: float = 1e-10, max_sweeps: int = 20,
                 rhp_tol: float = DEFAULT_TOL) -> TrajectoryRecord:
    """Fixed-point iteration of ``r(t) = r0 + eps int_0^t F(s, r(s)) ds`` on ``steps + 1``
    equispaced nodes (trapezoid in time), until successive sweeps differ by ``tol``."""
    if xgrid is None:
        xgrid = inner_grid(spec)
    zg = r0.grid
    ts = np.linspace(0.0, T, steps + 1)
    path = np.tile(r0.values, (steps + 1, 1))
    fvals = np.zeros_like(path)
    for sweep in range(max_sweeps):
        for j, t in enumerate(ts):
            if spec.epsilon == 0:
                break
            rd = ReflectionData.from_field(ComplexField(zg, path[j]))
            fvals[j] = f_functional(t, rd, spec, xgrid, rhp_tol).F.values
        dt = T / steps
        cum = np.zeros_like(path)
        cum[1:] = np.cumsum(0.5 * dt * (fvals[1:] + fvals[:-1]), axis=0)
        new = r0.values[None, :] + spec.epsilon * cum
        change = float(np.max(np.abs(new - path)))
        path = new
        if change <= tol:
            break
    else:
        log.warning("Picard iteration stopped after %d sweeps (change %.3g)", max_sweeps, change)
    traj = TrajectoryRecord(rho0=r0.rho, eta0=r0.eta)
    for t, vals in zip(ts, path):
        traj.append(t, ReflectionData.from_field(ComplexField(zg, vals), check_defocusing=False), 0.0)
    return traj


@dataclass(frozen=True)
class CauchyFit:
    rinf: ReflectionData
    rate: float
    times: tuple
    differences: tuple
    degenerate: bool = False
    monotone: bool = True


def r_infinity(traj: TrajectoryRecord, base: float | None = None) -> CauchyFit:
    """Last snapshot as ``r_infinity`` and the decay exponent of ``||r(2t) - r(t)||_{H^{1,1}}``.

    Uses the dyadic times ``base, 2 base, 4 base, ...`` found in the trajectory
    (``base`` defaults to the first positive time).
    """
    times = np.asarray(traj.times)
    if base is None:
        base = times[times > 0][0]
    dyadic = []
    t = base
    while t <= times[-1] * (1 + 1e-12):
        try:
            traj.at(t)
            dyadic.append(t)
        except KeyError:
            break
        t *= 2
    if len(dyadic) < 2:
        raise DomainError("trajectory does not cover a dyadic sweep")
    diffs = []
    for t1, t2 in zip(dyadic[:-1], dyadic[1:]):
        late = traj.at(t2)
        early = traj.at(t1)
        if early.grid != late.grid:
            early = resample(early, late.grid)
        d = late.values - early.values
        diffs.append(h_norms(ComplexField(late.grid, d)).h11)
    rinf = traj.snapshots[-1]
    diffs = np.asarray(diffs)
    if np.all(diffs == 0) or np.any(diffs <= 0):
        return CauchyFit(rinf, float("nan"), tuple(dyadic[:-1]), tuple(diffs), degenerate=True)
    from .estimates import fit_decay

    fit = fit_decay(dyadic[:-1], diffs)
    monotone = bool(np.all(np.diff(diffs) < 0))
    if not monotone:
        log.warning("Cauchy differences are not monotone: %s", diffs)
    return CauchyFit(rinf, fit.exponent, tuple(dyadic[:-1]), tuple(diffs), False, monotone)
