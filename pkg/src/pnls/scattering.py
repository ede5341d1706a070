"""Direct scattering for the AKNS system ``Psi' = (i z sigma + Q) Psi``.

``sigma = diag(1/2, -1/2)`` and ``Q = [[0, q], [conj(q), 0]]``.  The system is
integrated in the interaction gauge ``Psi = e^{i x z sigma} Y`` where
``Y' = [[0, q e^{-ixz}], [conj(q) e^{ixz}, 0]] Y`` has no stiff oscillation
left in its solution.  Starting from ``Y = I`` at the left edge, ``Y`` at the
right edge is the scattering matrix ``S = [[a, b_breve], [b, a_breve]]`` with
``Psi^- = Psi^+ S``, and the reflection coefficient is ``r = b_breve / a``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateEntryError, DomainError, IntegratorFailure, TruncationError
from .grids import ComplexField, Grid1D, h_norms

log = logging.getLogger(__name__)

POTENTIAL_EDGE_TOL = 1e-10
REFLECTION_EDGE_TOL = 1e-8


@dataclass(frozen=True)
class ReflectionData:
    r: ComplexField
    rho: float
    eta: float

    #: ``rho <= EMBEDDING_CONSTANT * eta``.  In the continuum
    #: ``sup|f|^2 <= ||f|| ||f'||`` gives 2**-0.5; 1 leaves room for grid effects.
    EMBEDDING_CONSTANT = 1.0

    @classmethod
    def from_field(cls, r: ComplexField, check_defocusing: bool = True) -> "ReflectionData":
        rho = r.sup
        eta = h_norms(r).h11
        if check_defocusing and not rho < 1:
            raise DomainError(f"sup|r| = {rho:.6g} violates the defocusing condition sup|r| < 1")
        if rho > cls.EMBEDDING_CONSTANT * eta + 1e-12:
            raise DomainError(f"sup|r| = {rho:.6g} exceeds the H^(1,1) bound {eta:.6g}")
        return cls(r, rho, eta)

    @classmethod
    def from_values(cls, grid: Grid1D, values) -> "ReflectionData":
        return cls.from_field(ComplexField(grid, values))

    @property
    def grid(self) -> Grid1D:
        return self.r.grid

    @property
    def values(self) -> np.ndarray:
        return self.r.values


@dataclass(frozen=True)
class ScatteringEntries:
    zgrid: Grid1D
    a: ComplexField
    b: ComplexField
    a_breve: ComplexField
    b_breve: ComplexField

    def unitarity_defect(self) -> float:
        """``max_z | |a|^2 - |b|^2 - 1 |``."""
        return float(np.max(np.abs(np.abs(self.a.values) ** 2 - np.abs(self.b.values) ** 2 - 1)))

    def symmetry_defect(self) -> float:
        """Distance from ``a_breve = conj(a)``, ``b_breve = conj(b)`` on the real line."""
        da = np.abs(self.a_breve.values - np.conj(self.a.values))
        db = np.abs(self.b_breve.values - np.conj(self.b.values))
        return float(max(da.max(), db.max()))


def _midpoints(q: np.ndarray, h: float) -> np.ndarray:
    # band-limited (Fourier) interpolation to x + h/2
    k = 2 * np.pi * np.fft.fftfreq(q.size, d=h)
    return np.fft.ifft(np.fft.fft(q) * np.exp(0.5j * k * h))


def _check_potential(q: ComplexField) -> None:
    edge = q.edge_magnitude()
    if edge >= POTENTIAL_EDGE_TOL:
        raise TruncationError(
            f"potential is {edge:.3g} at the grid edge; it must decay below {POTENTIAL_EDGE_TOL:g}")


def _integrate(q: ComplexField, z: np.ndarray, side: str) -> np.ndarray:
    """RK4 for ``Y`` over the whole x-grid, vectorised over ``z``.

    Returns ``Y`` at the far edge with shape ``(len(z), 2, 2)``.
    """
    g = q.grid
    x = g.nodes
    qv = q.values
    qm = _midpoints(qv, g.spacing)
    h = g.spacing
    n = g.count
    if side == "left":
        order = range(n - 1)
        step = h
    else:
        order = range(n - 1, 0, -1)
        step = -h
    z = np.asarray(z, dtype=float)
    # y[row, col, z]; the two columns obey the same 2x2 system
    y = np.zeros((2, 2, z.size), complex)
    y[0, 0] = 1.0
    y[1, 1] = 1.0

    def rhs(xx, qq, yy):
        e = np.exp(-1j * xx * z)
        alpha = qq * e
        beta = np.conj(qq) / e
        out = np.empty_like(yy)
        out[0] = alpha * yy[1]
        out[1] = beta * yy[0]
        return out

    for j in order:
        jn = j + 1 if side == "left" else j - 1
        xm = x[j] + 0.5 * step
        qmid = qm[j] if side == "left" else qm[j - 1]
        k1 = rhs(x[j], qv[j], y)
        k2 = rhs(xm, qmid, y + 0.5 * step * k1)
        k3 = rhs(xm, qmid, y + 0.5 * step * k2)
        k4 = rhs(x[jn], qv[jn], y + step * k3)
        y = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise IntegratorFailure("Jost integration produced non-finite values")
    return np.moveaxis(y, 2, 0)


def jost_solve(q: ComplexField, z: float, side: Literal["left", "right"] = "left") -> np.ndarray:
    """Integrate the AKNS system at spectral parameter ``z``.

    ``side='left'`` starts from ``Psi e^{-ixz sigma} = I`` at the left edge (the
    Jost solution normalised at minus infinity) and ``side='right'`` from the
    right edge.  Returns ``Psi e^{-ixz sigma}`` at the opposite edge.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not np.isfinite(z):
        raise DomainError("z must be finite")
    _check_potential(q)
    y = _integrate(q, np.array([z]), side)[0]
    xf = q.grid.end if side == "left" else q.grid.origin
    ph = np.exp(0.5j * xf * z)
    # Psi e^{-ixz sigma} = e^{ixz sigma} Y e^{-ixz sigma}
    return np.array([[y[0, 0], y[0, 1] * ph ** 2], [y[1, 0] / ph ** 2, y[1, 1]]])


def scattering_map(q: ComplexField, zgrid: Grid1D) -> ScatteringEntries:
    """Scattering entries ``a, b`` (and their breve partners) on ``zgrid``."""
    _check_potential(q)
    y = _integrate(q, zgrid.nodes, "left")
    return ScatteringEntries(
        zgrid,
        a=ComplexField(zgrid, y[:, 0, 0]),
        b=ComplexField(zgrid, y[:, 1, 0]),
        a_breve=ComplexField(zgrid, y[:, 1, 1]),
        b_breve=ComplexField(zgrid, y[:, 0, 1]),
    )


def reflection_of(entries: ScatteringEntries) -> ReflectionData:
    """``r = b_breve / a = conj(b) / a`` on the real line."""
    a = entries.a.values
    if np.min(np.abs(a)) < 1e-12:
        raise DegenerateEntryError("|a(z)| < 1e-12 on the z-grid")
    r = ComplexField(entries.zgrid, np.conj(entries.b.values) / a)
    edge = r.edge_magnitude()
    if edge > REFLECTION_EDGE_TOL:
        log.warning("|r| = %.3g at the z-grid edge exceeds %.0e; widen the z-grid", edge,
                    REFLECTION_EDGE_TOL)
    return ReflectionData.from_field(r)


def reflection_coefficient(q: ComplexField, zgrid: Grid1D) -> ReflectionData:
    """The direct scattering map ``q -> r``."""
    return reflection_of(scattering_map(q, zgrid))


def lipschitz_ratio(q1: ComplexField, q2: ComplexField, zgrid: Grid1D) -> float:
    """``||r(q2) - r(q1)||_{H^{1,1}} / ||q2 - q1||_{H^{1,1}}``."""
    r1 = reflection_coefficient(q1, zgrid).values
    r2 = reflection_coefficient(q2, zgrid).values
    num = h_norms(ComplexField(zgrid, r2 - r1)).h11
    den = h_norms(ComplexField(q1.grid, q2.values - q1.values)).h11
    if den == 0:
        raise DomainError("potentials coincide")
    return num / den


def resample(r: ReflectionData, grid: Grid1D) -> ReflectionData:
    """Spline ``r`` onto ``grid``; zero outside the original grid."""
    if grid == r.grid:
        return r
    z = grid.nodes
    g = r.grid
    inside = (z >= g.origin) & (z <= g.end)
    vals = np.zeros(z.size, complex)
    vals[inside] = r.r.interpolator()(z[inside])
    return ReflectionData.from_field(ComplexField(grid, vals))
