"""JSON experiment configuration shared by the command-line tools."""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .fieldio import read_field
from .grids import ComplexField, Grid1D
from .perturbation import PerturbationSpec
from .scattering import reflection_coefficient


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    count: int

    def grid(self) -> Grid1D:
        return Grid1D.from_bounds(self.lo, self.hi, self.count)


def _grid_spec(v) -> GridSpec:
    if isinstance(v, GridSpec):
        return v
    if isinstance(v, dict):
        return GridSpec(float(v["lo"]), float(v["hi"]), int(v["count"]))
    lo, hi, n = v
    return GridSpec(float(lo), float(hi), int(n))


@dataclass(frozen=True)
class ExperimentConfig:
    """Every numeric knob of an experiment.

    ``q0`` is either a file (CSV or binary field) or a preset ``name:amplitude``
    with name in ``sech``, ``gaussian``, ``zero``.
    """

    q0: str = "sech:0.3"
    x_grid: GridSpec = GridSpec(-30.0, 30.0, 4096)
    z_grid: GridSpec = GridSpec(-12.0, 12.0, 2048)
    rhp_tol: float = 1e-10
    perturbation: str = "gaussian:1.0"
    epsilon: float = 0.0
    l: float = 4.0
    sweep_times: tuple = (50.0, 100.0, 200.0, 400.0)
    t_min: float = 1.0
    # pde oracle
    pde_dx: float = 0.2
    pde_dt_per_time: float = 2e-4  # dt for the stage ending at t is t * this
    pde_dt_min: float = 0.005
    pde_dt_max: float = 0.08
    cone_z: float = 9.0  # PDE half-width 2 t cone_z + pad
    cone_pad: float = 60.0
    # error measurement window |x| <= 2 t window_z
    window_z: float = 6.0
    # IST samples per time (0 disables)
    ist_points: int = 5
    ist_window_z: float = 2.0
    ist_zmax: float = 8.0
    # acceptance
    spread_factor: float = 3.0
    min_exponent: float = 0.70
    output_dir: str = "."
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x_grid", _grid_spec(self.x_grid))
        object.__setattr__(self, "z_grid", _grid_spec(self.z_grid))
        object.__setattr__(self, "sweep_times", tuple(float(t) for t in self.sweep_times))

    # --- construction ----------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, validate: bool = True, check_rho: bool = True) -> "ExperimentConfig":
        with open(path) as fh:
            cfg = cls.from_dict(json.load(fh))
        if validate:
            cfg.validate(check_rho=check_rho)
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sweep_times"] = list(self.sweep_times)
        return d

    def dump(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # --- validation ------------------------------------------------------
    def tolerances(self) -> dict:
        return {"rhp_tol": self.rhp_tol, "pde_dx": self.pde_dx, "pde_dt_min": self.pde_dt_min,
                "pde_dt_max": self.pde_dt_max, "pde_dt_per_time": self.pde_dt_per_time}

    def validate(self, check_rho: bool = True) -> None:
        for name, v in self.tolerances().items():
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.pde_dt_min > self.pde_dt_max:
            raise ValueError("pde_dt_min exceeds pde_dt_max")
        if any(t < self.t_min for t in self.sweep_times):
            raise ValueError(f"sweep times must be >= t_min = {self.t_min}")
        if list(self.sweep_times) != sorted(set(self.sweep_times)):
            raise ValueError("sweep times must be strictly increasing")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not _is_preset(self.q0) and not os.path.exists(self.q0):
            raise FileNotFoundError(self.q0)
        PerturbationSpec.parse_profile(self.perturbation, epsilon=self.epsilon, l=self.l)
        if check_rho:
            r = reflection_coefficient(self.initial_field(), self.z_grid.grid())
            if not r.rho < 1:
                raise DomainError(f"sup|r| = {r.rho} >= 1: not admissible")

    # --- derived objects -------------------------------------------------
    def perturbation_spec(self) -> PerturbationSpec:
        return PerturbationSpec.parse_profile(self.perturbation, epsilon=self.epsilon, l=self.l)

    def initial_field(self, grid: Grid1D | None = None) -> ComplexField:
        grid = grid or self.x_grid.grid()
        if not _is_preset(self.q0):
            return read_field(self.q0)
        name, _, amp = self.q0.partition(":")
        a = float(amp) if amp else 1.0
        shapes = {
            "sech": lambda x: a / np.cosh(np.clip(x, -700, 700)),
            "gaussian": lambda x: a * np.exp(-x * x),
            "zero": lambda x: np.zeros_like(x),
        }
        return ComplexField.from_function(grid, shapes[name])


def _is_preset(s: str) -> bool:
    return s.partition(":")[0] in ("sech", "gaussian", "zero")
