"""Beals-Coifman solution of the NLS Riemann-Hilbert problem on the real line.

Jump factors for ``r`` at ``(x, t)``::

    w^- = [[0, r e^{i theta}], [0, 0]]
    w^+ = [[0, 0], [-conj(r) e^{-i theta}, 0]],   theta = x z - t z^2

and ``mu`` solves ``(1 - C_w) mu = I`` with
``C_w h = C^+(h w^-) + C^-(h w^+)``.  The boundary values are
``m_pm = mu v^pm`` and ``q(x, t) = Q_12 / (2 pi)`` with ``Q = int mu (w^+ + w^-)``.

Cauchy projections act on samples through the discrete Hilbert transform of the
sinc interpolant, ``(Hf)_j = sum_m f_m (1 - cos(pi (j - m))) / (pi (j - m))``,
evaluated as a zero-padded (non-periodic) FFT convolution.  Then
``C^pm = +-1/2 + (i/2) H`` and ``C^+ - C^- = 1`` holds to rounding.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
import scipy.fft as sfft
from scipy.linalg import toeplitz
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import AliasingError, DomainError, SolverFailure
from .grids import ComplexField, Grid1D
from .scattering import ReflectionData

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
RESTART = 40
DENSE_MAX = 512
STAGNATION_WINDOW = 50
ALIAS_WARN = 1e-6
ALIAS_ERROR = 0.1

#: documentation-only symbols of the L^p a priori theory; no values are claimed
#: for K_p, ell_1, ell_2, lambda or the projection norm c_p with p != 2.
C2_PROJECTION_NORM = 1.0


# --------------------------------------------------------------------------- #
# phase
# --------------------------------------------------------------------------- #

def phase(z, x: float, t: float):
    """``theta(z; x, t) = x z - t z^2``."""
    return x * np.asarray(z) - t * np.asarray(z) ** 2


def stationary_point(x: float, t: float) -> float:
    if t == 0:
        raise DomainError("stationary point undefined at t = 0")
    return x / (2 * t)


# --------------------------------------------------------------------------- #
# containers
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Matrix2Field:
    """2x2 matrix samples on a grid; ``values[i, j]`` is entry ``(i+1, j+1)``."""

    zgrid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != (2, 2, self.zgrid.count):
            raise ValueError(f"expected shape (2, 2, {self.zgrid.count}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix field contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls, grid: Grid1D) -> "Matrix2Field":
        v = np.zeros((2, 2, grid.count), complex)
        v[0, 0] = v[1, 1] = 1
        return cls(grid, v)

    def entry(self, i: int, j: int) -> ComplexField:
        return ComplexField(self.zgrid, self.values[i - 1, j - 1])

    m11 = property(lambda self: self.entry(1, 1))
    m12 = property(lambda self: self.entry(1, 2))
    m21 = property(lambda self: self.entry(2, 1))
    m22 = property(lambda self: self.entry(2, 2))

    def det(self) -> np.ndarray:
        v = self.values
        return v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]

    def pointwise_norm(self) -> np.ndarray:
        """Spectral norm of the matrix at every node."""
        return np.linalg.svd(np.moveaxis(self.values, 2, 0), compute_uv=False)[:, 0]

    def sup_entry(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class JumpFactors:
    zgrid: Grid1D
    wplus: Matrix2Field
    wminus: Matrix2Field

    @property
    def w12(self) -> np.ndarray:
        return self.wminus.values[0, 1]

    @property
    def w21(self) -> np.ndarray:
        return self.wplus.values[1, 0]


def jump_factors(r: ReflectionData, x: float, t: float) -> JumpFactors:
    g = r.grid
    e = np.exp(1j * phase(g.nodes, x, t))
    wm = np.zeros((2, 2, g.count), complex)
    wp = np.zeros((2, 2, g.count), complex)
    wm[0, 1] = r.values * e
    wp[1, 0] = -np.conj(r.values) / e
    return JumpFactors(g, Matrix2Field(g, wp), Matrix2Field(g, wm))


@dataclass(frozen=True)
class RhpSolution:
    mu: Matrix2Field
    residual: float
    iterations: int
    x: float
    t: float
    r: ReflectionData = field(repr=False)
    method: str = "gmres"
    residual_history: tuple = field(default=(), repr=False)

    @property
    def jump(self) -> JumpFactors:
        return jump_factors(self.r, self.x, self.t)


# --------------------------------------------------------------------------- #
# Cauchy projections
# --------------------------------------------------------------------------- #

@lru_cache(maxsize=32)
def _hilbert_symbol(n: int) -> tuple[int, np.ndarray]:
    size = sfft.next_fast_len(2 * n)
    j = np.arange(1, n)
    ker = np.zeros(size)
    odd = (j % 2) == 1
    vals = np.where(odd, 2.0 / (np.pi * j), 0.0)
    ker[1:n] = vals
    ker[size - n + 1:] = -vals[::-1]
    sym = sfft.fft(ker)
    sym.setflags(write=False)
    return size, sym


def hilbert_samples(f: np.ndarray) -> np.ndarray:
    """Discrete Hilbert transform ``(1/pi) PV int f(s) / (z - s) ds`` along the last axis."""
    n = f.shape[-1]
    size, sym = _hilbert_symbol(n)
    return sfft.ifft(sfft.fft(f, n=size, axis=-1) * sym, axis=-1)[..., :n]


@lru_cache(maxsize=8)
def hilbert_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    col = np.where(j % 2 == 1, 2.0 / (np.pi * np.maximum(j, 1)), 0.0)
    m = toeplitz(col, -col)
    m.setflags(write=False)
    return m


def cplus(f: np.ndarray) -> np.ndarray:
    return 0.5 * f + 0.5j * hilbert_samples(f)


def cminus(f: np.ndarray) -> np.ndarray:
    return -0.5 * f + 0.5j * hilbert_samples(f)


def _periodic_project(values: np.ndarray, side: str) -> np.ndarray:
    n = values.shape[-1]
    k = np.fft.fftfreq(n)
    weight = np.where(k > 0, 1.0, 0.0)
    weight[k == 0] = 0.5
    if n % 2 == 0:
        weight[n // 2] = 0.5
    out = np.fft.ifft(np.fft.fft(values, axis=-1) * weight, axis=-1)
    return out if side == "plus" else out - values


def cauchy_project(h: ComplexField, side: Literal["plus", "minus"],
                   method: Literal["sinc", "periodic"] = "sinc") -> ComplexField:
    """Boundary value ``C^pm h`` of the Cauchy transform on the real line.

    ``method='sinc'`` (default) uses the non-periodic discrete Hilbert transform.
    ``method='periodic'`` keeps the positive-frequency half of the DFT, with
    weight 1/2 at zero and Nyquist frequency; it treats the grid as a period.
    """
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    v = h.values
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if scale > 0:
        ratio = h.edge_magnitude() / scale
        if ratio > ALIAS_ERROR:
            raise AliasingError(f"input does not decay: edge/sup = {ratio:.3g}")
        if ratio > ALIAS_WARN:
            log.warning("Cauchy projection input is %.3g of its maximum at the grid edge", ratio)
    if method == "periodic":
        return h.with_values(_periodic_project(v, side))
    if method != "sinc":
        raise ValueError(f"unknown method {method!r}")
    return h.with_values(cplus(v) if side == "plus" else cminus(v))


# --------------------------------------------------------------------------- #
# the singular integral operator
# --------------------------------------------------------------------------- #

def _apply_cw(m: np.ndarray, w12: np.ndarray, w21: np.ndarray) -> np.ndarray:
    """``C_w`` on a stack of matrix fields shaped ``(..., 2, 2, N)``."""
    out = np.empty_like(m)
    # h w^- only has a second column, h w^+ only a first column
    out[..., :, 1, :] = cplus(m[..., :, 0, :] * w12)
    out[..., :, 0, :] = cminus(m[..., :, 1, :] * w21)
    return out


def apply_cw(mfield: Matrix2Field, jump: JumpFactors) -> Matrix2Field:
    return Matrix2Field(mfield.zgrid, _apply_cw(mfield.values, jump.w12, jump.w21))


def _l2(values: np.ndarray, h: float) -> float:
    return float(math.sqrt(h) * np.linalg.norm(values))


def _dense_row_matrix(w12: np.ndarray, w21: np.ndarray) -> np.ndarray:
    """Matrix of ``1 - C_w`` acting on one row ``(f1, f2)`` of ``mu``."""
    n = w12.size
    hm = hilbert_matrix(n)
    eye = np.eye(n)
    cp = 0.5 * eye + 0.5j * hm
    cm = -0.5 * eye + 0.5j * hm
    a = np.eye(2 * n, dtype=complex)
    a[:n, n:] = -cm * w21[None, :]
    a[n:, :n] = -cp * w12[None, :]
    return a


def _residual(mu: np.ndarray, w12, w21, h) -> float:
    eye = np.zeros_like(mu)
    eye[0, 0] = eye[1, 1] = 1
    return _l2(mu - _apply_cw(mu, w12, w21) - eye, h)


class _Stagnation(Exception):
    pass


def _solve_gmres(w12, w21, h, tol, restart, maxiter, history):
    n = w12.size
    eye = np.zeros((2, 2, n), complex)
    eye[0, 0] = eye[1, 1] = 1
    rhs = _apply_cw(eye, w12, w21).ravel()

    def matvec(v):
        m = v.reshape(2, 2, n)
        return (m - _apply_cw(m, w12, w21)).ravel()

    op = LinearOperator((4 * n, 4 * n), matvec=matvec, dtype=complex)
    best = [np.inf, 0]

    def callback(res):
        history.append(float(res))
        if res < best[0] * (1 - 1e-3):
            best[0], best[1] = res, len(history)
        elif len(history) - best[1] >= STAGNATION_WINDOW:
            raise _Stagnation

    atol = 0.5 * tol / math.sqrt(h)
    try:
        sol, info = gmres(op, rhs, rtol=0.0, atol=atol, restart=restart,
                          maxiter=maxiter, callback=callback, callback_type="pr_norm")
    except _Stagnation:
        return None
    return eye + sol.reshape(2, 2, n)


def _solve_dense(w12, w21):
    n = w12.size
    a = _dense_row_matrix(w12, w21)
    rhs = np.zeros((2 * n, 2), complex)
    rhs[:n, 0] = 1
    rhs[n:, 1] = 1
    sol = np.linalg.solve(a, rhs)
    mu = np.empty((2, 2, n), complex)
    mu[0, 0], mu[0, 1] = sol[:n, 0], sol[n:, 0]
    mu[1, 0], mu[1, 1] = sol[:n, 1], sol[n:, 1]
    return mu


def solve_mu(r: ReflectionData, x: float, t: float, tol: float = DEFAULT_TOL,
             method: Literal["auto", "gmres", "dense"] = "auto",
             restart: int = RESTART, maxiter: int = 200) -> RhpSolution:
    """Solve ``(1 - C_w) mu = I`` for the jump of ``r`` at ``(x, t)``.

    ``method='auto'`` runs restarted GMRES and falls back to a dense solve when
    the Krylov iteration fails on grids of at most 512 nodes.  Raises
    :class:`SolverFailure` (with the residual history) otherwise.
    """
    if not r.rho < 1:
        raise DomainError(f"sup|r| = {r.rho} >= 1")
    g = r.grid
    h = g.spacing
    jump = jump_factors(r, x, t)
    w12, w21 = jump.w12, jump.w21
    if not np.any(r.values):
        return RhpSolution(Matrix2Field.identity(g), 0.0, 0, x, t, r, "trivial")

    history: list[float] = []
    mu = None
    used = method
    if method in ("auto", "gmres"):
        mu = _solve_gmres(w12, w21, h, tol, restart, maxiter, history)
        used = "gmres"
        if mu is not None and _residual(mu, w12, w21, h) > tol:
            mu = None
        if mu is None and (method == "gmres" or g.count > DENSE_MAX):
            raise SolverFailure(
                f"GMRES did not reach tol={tol:g} at x={x:g}, t={t:g}", history)
    if mu is None:
        if g.count > DENSE_MAX and method == "dense":
            log.info("dense solve on %d nodes", g.count)
        mu = _solve_dense(w12, w21)
        used = "dense"
    res = _residual(mu, w12, w21, h)
    return RhpSolution(Matrix2Field(g, mu), res, len(history), x, t, r, used, tuple(history))


def neumann_mu(r: ReflectionData, x: float, t: float, terms: int) -> Matrix2Field:
    """Partial sum ``sum_{k < terms} C_w^k I``."""
    jump = jump_factors(r, x, t)
    cur = Matrix2Field.identity(r.grid).values
    total = cur.copy()
    for _ in range(terms - 1):
        cur = _apply_cw(cur, jump.w12, jump.w21)
        total = total + cur
    return Matrix2Field(r.grid, total)


# --------------------------------------------------------------------------- #
# boundary values and reconstruction
# --------------------------------------------------------------------------- #

def boundary_values(sol: RhpSolution) -> tuple[Matrix2Field, Matrix2Field]:
    """``(m_+, m_-) = (mu v^+, mu v^-)``."""
    jump = sol.jump
    mu = sol.mu.values
    w12, w21 = jump.w12, jump.w21
    mp = mu.copy()
    mm = mu.copy()
    # v^+ = I + w^+ adds w21 times column 2 to column 1
    mp[:, 0] = mu[:, 0] + mu[:, 1] * w21
    # v^- = I - w^- subtracts w12 times column 1 from column 2
    mm[:, 1] = mu[:, 1] - mu[:, 0] * w12
    return Matrix2Field(sol.mu.zgrid, mp), Matrix2Field(sol.mu.zgrid, mm)


def jump_matrix(r: ReflectionData, x: float, t: float) -> np.ndarray:
    """``e^{i theta ad sigma} v`` with shape ``(2, 2, N)``."""
    e = np.exp(1j * phase(r.grid.nodes, x, t))
    rv = r.values
    return np.array([[1 - np.abs(rv) ** 2, rv * e], [-np.conj(rv) / e, np.ones_like(rv)]])


def jump_residual(sol: RhpSolution) -> float:
    """``max_z |m_+ - m_- v|`` over all entries."""
    mp, mm = boundary_values(sol)
    v = jump_matrix(sol.r, sol.x, sol.t)
    prod = np.einsum("ikn,kjn->ijn", mm.values, v)
    return float(np.max(np.abs(mp.values - prod)))


def bold_q(sol: RhpSolution) -> np.ndarray:
    """``Q = int mu (w^+ + w^-) dz`` by the trapezoid rule."""
    jump = sol.jump
    w = jump.wplus.values + jump.wminus.values
    integrand = np.einsum("ikn,kjn->ijn", sol.mu.values, w)
    return np.sum(integrand * sol.mu.zgrid.trapezoid_weights(), axis=-1)


def reconstruct(sol: RhpSolution) -> complex:
    """``q(x, t) = Q_12 / (2 pi)``."""
    return complex(bold_q(sol)[0, 1] / (2 * np.pi))


@dataclass(frozen=True)
class Reconstruction:
    """``q`` on an x-grid together with per-node solver diagnostics."""

    q: ComplexField
    residuals: np.ndarray
    iterations: np.ndarray
    t: float
    jump_residuals: np.ndarray | None = None


def reconstruct_on_grid(r: ReflectionData, xgrid: Grid1D, t: float,
                        tol: float = DEFAULT_TOL) -> Reconstruction:
    n = xgrid.count
    q = np.empty(n, complex)
    res = np.empty(n)
    its = np.empty(n, int)
    jres = np.empty(n)
    for i, x in enumerate(xgrid.nodes):
        sol = solve_mu(r, x, t, tol)
        q[i] = reconstruct(sol)
        res[i] = sol.residual
        its[i] = sol.iterations
        jres[i] = jump_residual(sol)
    return Reconstruction(ComplexField(xgrid, q), res, its, t, jres)


# --------------------------------------------------------------------------- #
# resolvent norm
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ResolventEstimate:
    norm: float
    bound: float
    m_infinity: float
    rho: float
    method: str
    iterations: int

    @property
    def within_bound(self) -> bool:
        return 1.0 - 1e-8 <= self.norm <= self.bound


def resolvent_bound(rho: float, m_infinity: float, c2: float = C2_PROJECTION_NORM) -> float:
    """``K_2 = (1 + rho) (c_2 (1 + rho) M_inf^2 + 1)``."""
    return (1 + rho) * (c2 * (1 + rho) * m_infinity ** 2 + 1)


def m_infinity(sol: RhpSolution) -> float:
    """``sup_z ||m_+(z)||`` with the pointwise spectral matrix norm (>= 1 since det = 1)."""
    mp, _ = boundary_values(sol)
    return float(np.max(mp.pointwise_norm()))


def _row_operator(w12, w21):
    n = w12.size

    def mv(v):
        f1, f2 = v[:n], v[n:]
        return np.concatenate([f1 - cminus(f2 * w21), f2 - cplus(f1 * w12)])

    def rmv(v):
        g1, g2 = v[:n], v[n:]
        return np.concatenate([g1 - np.conj(w12) * cplus(g2), g2 - np.conj(w21) * cminus(g1)])

    return LinearOperator((2 * n, 2 * n), matvec=mv, rmatvec=rmv, dtype=complex)


def _inverse_norm_power(w12, w21, tol, iters, seed):
    n = w12.size
    op = _row_operator(w12, w21)
    adj = LinearOperator(op.shape, matvec=op.rmatvec, dtype=complex)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
    v /= np.linalg.norm(v)
    est = 0.0
    k = 0
    for k in range(1, iters + 1):
        y, info = gmres(op, v, rtol=tol, atol=0.0, restart=RESTART, maxiter=200)
        u, info2 = gmres(adj, y, rtol=tol, atol=0.0, restart=RESTART, maxiter=200)
        if info or info2:
            raise SolverFailure("inner solve failed during power iteration")
        new = math.sqrt(abs(np.vdot(v, u).real))
        v = u / np.linalg.norm(u)
        if est and abs(new - est) <= 1e-6 * new:
            est = new
            break
        est = new
    return est, k


def resolvent_norm(r: ReflectionData, x: float, t: float, p: int = 2,
                   power_iterations: int = 20, seed: int = 0,
                   method: Literal["auto", "dense", "power"] = "auto") -> ResolventEstimate:
    """Empirical ``||(1 - C_w)^{-1}||_{L^2 -> L^2}`` and the bound ``K_2``.

    Rows of ``mu`` decouple and see the same operator, so the norm is computed
    on a single row.  Dense SVD up to 512 nodes, power iteration on the normal
    operator above that.
    """
    if p != 2:
        raise DomainError("only p = 2 is supported; c_p is not known for p != 2")
    sol = solve_mu(r, x, t)
    minf = m_infinity(sol)
    bound = resolvent_bound(r.rho, minf)
    jump = sol.jump
    w12, w21 = jump.w12, jump.w21
    if method == "dense" or (method == "auto" and r.grid.count <= DENSE_MAX):
        a = _dense_row_matrix(w12, w21)
        smin = np.linalg.svd(a, compute_uv=False)[-1]
        return ResolventEstimate(float(1.0 / smin), bound, minf, r.rho, "dense", 0)
    est, k = _inverse_norm_power(w12, w21, 1e-10, power_iterations, seed)
    return ResolventEstimate(est, bound, minf, r.rho, "power", k)
