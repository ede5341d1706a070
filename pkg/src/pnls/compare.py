"""Long-time comparison of the PDE oracle, the IST solution and ``q_as``.

The PDE runs in stages ending at the sweep times.  Before each stage the
periodic domain is zero-padded to cover the dispersive cone ``|x| <= 2 t cone_z``
and the step grows with ``t`` (the nonlinearity weakens like ``1/t``).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .asymptotics import asymptotic_profile_on_grid
from .config import ExperimentConfig
from .errors import ISTError
from .estimates import fit_decay, z_grid_for
from .grids import ComplexField, Grid1D
from .pde import PdeState, extend_domain, mass_drift, run
from .rhp import reconstruct, solve_mu
from .scattering import ReflectionData, reflection_coefficient, resample

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompareRow:
    t: float
    dt: float
    nx: int
    sup_q: float
    err_pde_qas: float
    scaled_pde_qas: float  # t^{3/4} err_pde_qas
    err_ist_qas: float
    scaled_ist_qas: float
    err_ist_pde: float
    mass_drift: float
    status: str = "ok"


COLUMNS = tuple(f.name for f in fields(CompareRow))
_TYPES = tuple(f.type for f in fields(CompareRow))


@dataclass(frozen=True)
class CompareReport:
    rows: tuple
    exponent: float
    spread: float  # max over rows of max(s/median, median/s) for the scaled PDE error
    passes: bool

    def scaled(self) -> np.ndarray:
        return np.array([row.scaled_pde_qas for row in self.rows])


def _pde_grid_count(t: float, cfg: ExperimentConfig) -> int:
    half = 2 * t * cfg.cone_z + cfg.cone_pad
    return sfft.next_fast_len(int(math.ceil(2 * half / cfg.pde_dx)))


def _initial_pde_state(cfg: ExperimentConfig, t_first: float) -> PdeState:
    n = _pde_grid_count(t_first, cfg)
    grid = Grid1D(-0.5 * n * cfg.pde_dx, cfg.pde_dx, n)
    if cfg.q0.partition(":")[0] in ("sech", "gaussian", "zero"):
        q0 = cfg.initial_field(grid)
    else:
        src = cfg.initial_field()
        x = grid.nodes
        s = src.grid.nodes
        vals = (np.interp(x, s, src.values.real, left=0, right=0)
                + 1j * np.interp(x, s, src.values.imag, left=0, right=0))
        q0 = ComplexField(grid, vals)
    return PdeState.initial(q0)


def stage_dt(t_end: float, cfg: ExperimentConfig) -> float:
    return min(cfg.pde_dt_max, max(cfg.pde_dt_min, t_end * cfg.pde_dt_per_time))


def staged_pde(cfg: ExperimentConfig):
    """Yield ``(t, dt, state)`` at each sweep time."""
    spec = cfg.perturbation_spec()
    state = _initial_pde_state(cfg, cfg.sweep_times[0])
    for t in cfg.sweep_times:
        n = _pde_grid_count(t, cfg)
        if n > state.q.grid.count:
            state = extend_domain(state, n)
        dt = stage_dt(t, cfg)
        state = run(state, spec, t - state.t, dt, trace_every=max(1, int(round(1 / dt))))
        yield t, dt, state


def _window(x: np.ndarray, t: float, zw: float) -> np.ndarray:
    return np.abs(x) <= 2 * t * zw


def ist_samples(r0: ReflectionData, xs, t: float, zmax: float, tol: float) -> np.ndarray:
    """``q(x, t)`` from the Beals-Coifman solve at a few points, on a z-grid that
    resolves ``e^{i(xz - tz^2)}``."""
    xs = np.asarray(xs, float)
    zg = z_grid_for(zmax, t, xmax=float(np.max(np.abs(xs))) if xs.size else 0.0)
    r = resample(r0, zg)
    return np.array([reconstruct(solve_mu(r, float(x), t, tol)) for x in xs])


def compare(cfg: ExperimentConfig) -> CompareReport:
    """Run the sweep; a failing stage yields a row with ``status`` set and NaN errors."""
    cfg.validate(check_rho=False)
    r0 = reflection_coefficient(cfg.initial_field(), cfg.z_grid.grid())
    rows = []
    pde_iter = staged_pde(cfg)
    for t in cfg.sweep_times:
        nan = float("nan")
        try:
            _, dt, state = next(pde_iter)
        except (ISTError, ValueError) as exc:
            rows.append(CompareRow(t, nan, 0, nan, nan, nan, nan, nan, nan, nan, f"pde: {exc}"))
            log.error("PDE stage to t=%g failed: %s", t, exc)
            for t_rest in cfg.sweep_times[len(rows):]:
                rows.append(CompareRow(t_rest, nan, 0, nan, nan, nan, nan, nan, nan, nan,
                                       "pde: not reached"))
            break
        x = state.q.grid.nodes
        sel = _window(x, t, cfg.window_z)
        q = state.q.values[sel]
        status = "ok"
        try:
            qas = asymptotic_profile_on_grid(r0, x[sel], t, cfg.t_min)
            err = float(np.max(np.abs(q - qas))) if q.size else 0.0
        except ISTError as exc:
            qas, err, status = None, nan, f"asymptote: {exc}"
        err_iq = err_ip = nan
        if cfg.ist_points > 0 and qas is not None:
            xs = np.linspace(-2 * t * cfg.ist_window_z, 2 * t * cfg.ist_window_z, cfg.ist_points)
            try:
                qi = ist_samples(r0, xs, t, cfg.ist_zmax, cfg.rhp_tol)
                qas_i = asymptotic_profile_on_grid(r0, xs, t, cfg.t_min)
                qp = np.interp(xs, x, state.q.values.real) + 1j * np.interp(xs, x, state.q.values.imag)
                err_iq = float(np.max(np.abs(qi - qas_i)))
                err_ip = float(np.max(np.abs(qi - qp)))
            except ISTError as exc:
                status = f"ist: {exc}"
        rows.append(CompareRow(
            t, dt, state.q.grid.count, float(np.max(np.abs(q))) if q.size else 0.0,
            err, err * t ** 0.75, err_iq, err_iq * t ** 0.75, err_ip, mass_drift(state), status))
    return _summarize(tuple(rows), cfg)


def _summarize(rows: tuple, cfg: ExperimentConfig) -> CompareReport:
    errs = np.array([row.err_pde_qas for row in rows])
    ts = np.array([row.t for row in rows])
    scaled = errs * ts ** 0.75
    ok = np.isfinite(errs)
    if not ok.all():
        return CompareReport(rows, float("nan"), float("nan"), False)
    if np.all(errs == 0):
        return CompareReport(rows, float("inf"), 1.0, True)
    if np.any(errs <= 0):
        return CompareReport(rows, float("nan"), float("nan"), False)
    med = float(np.median(scaled))
    spread = float(np.max(np.maximum(scaled / med, med / scaled)))
    exponent = fit_decay(ts, errs).exponent if ts.size >= 2 else float("nan")
    passes = spread <= cfg.spread_factor and exponent >= cfg.min_exponent
    return CompareReport(rows, exponent, spread, bool(passes))


def write_report(path, rows) -> None:
    """CSV with the columns of :data:`COLUMNS`; floats are written with ``repr``."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])


def read_report(path) -> tuple:
    conv = {"float": float, "int": int, "str": str}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != COLUMNS:
            raise ValueError(f"unexpected columns {header}")
        return tuple(CompareRow(*(conv[ty](v) for ty, v in zip(_TYPES, line))) for line in rd)
