"""Numerical inverse scattering for the defocusing NLS with a localized perturbation."""
from .errors import (AliasingError, DegenerateEntryError, DegenerateFitError, DomainError,
                     FEvaluationError, InstabilityError, IntegratorFailure, InvalidFieldError,
                     ISTError, SolverFailure, StepSizeError, TruncationError)
from .grids import ComplexField, Grid1D, SobolevNorms, forward_transform, h_norms, inverse_transform, pv_integral
from .scattering import ReflectionData, ScatteringEntries, jost_solve, reflection_coefficient, reflection_of, scattering_map
from .rhp import (JumpFactors, Matrix2Field, RhpSolution, boundary_values, cauchy_project, phase,
                  reconstruct, reconstruct_on_grid, resolvent_norm, solve_mu, stationary_point)
from .asymptotics import AsymptoticProfile, asymptotic_profile, delta_fn, evolve_linear, log_gamma_arg
from .perturbation import (PerturbationSpec, TrajectoryRecord, evolve_dyadic, evolve_perturbed,
                           f_functional, g_term, r_infinity)
from .pde import PdeState, run as pde_run, step as pde_step

__version__ = "0.1.0"
