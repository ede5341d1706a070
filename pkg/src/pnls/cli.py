"""Command-line entry point ``pnls``.

Exit codes: 0 success, 1 bad input or usage, 2 a numeric acceptance check
failed, 3 a solver failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .asymptotics import asymptotic_profile_on_grid, evolve_linear
from .config import ExperimentConfig
from .errors import (DomainError, FEvaluationError, InstabilityError, IntegratorFailure,
                     InvalidFieldError, SolverFailure, TruncationError)
from .fieldio import read_field, write_field
from .grids import ComplexField, Grid1D, h_norms
from .scattering import ReflectionData, reflection_coefficient

log = logging.getLogger("pnls")

EXIT_OK, EXIT_INPUT, EXIT_ACCEPTANCE, EXIT_SOLVER = 0, 1, 2, 3
REPORT_COLUMNS = ("quantity", "t", "value", "fitted_exponent", "target_exponent", "pass")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return ExperimentConfig.load(args.config, validate=True, check_rho=False)
    return ExperimentConfig()


def _echo_config(cfg: ExperimentConfig, out: Path, **used) -> None:
    """Write the effective configuration plus command-specific values next to the output."""
    d = cfg.to_dict()
    d["command"] = used
    out = out if out.suffix == "" else out.parent
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as fh:
        json.dump(d, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _read_r(path) -> ReflectionData:
    return ReflectionData.from_field(read_field(path))


# --------------------------------------------------------------------------- #
# subcommands
# --------------------------------------------------------------------------- #

def cmd_scatter(args, cfg):
    q = read_field(args.input)
    r = reflection_coefficient(q, Grid1D.from_bounds(args.zmin, args.zmax, args.nz))
    write_field(args.out, r.r)
    _echo_config(cfg, Path(args.out), scatter=vars(args))
    print(f"rho = {r.rho:.6g}, eta = {r.eta:.6g}")
    return EXIT_OK


def cmd_reconstruct(args, cfg):
    from .rhp import reconstruct_on_grid

    r = _read_r(args.r)
    xg = Grid1D.from_bounds(args.xmin, args.xmax, args.nx)
    rec = reconstruct_on_grid(r, xg, args.t, args.tol or cfg.rhp_tol)
    write_field(args.out, rec.q)
    side = Path(args.out).with_name(Path(args.out).stem + "_residual.csv")
    with open(side, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("index", "x", "residual", "iterations", "jump_residual"))
        for i, x in enumerate(xg.nodes):
            w.writerow((i, repr(float(x)), repr(float(rec.residuals[i])), int(rec.iterations[i]),
                        repr(float(rec.jump_residuals[i]))))
    _echo_config(cfg, Path(args.out), reconstruct=vars(args))
    return EXIT_OK


def cmd_evolve(args, cfg):
    r = _read_r(args.r)
    write_field(args.out, evolve_linear(r, args.t).r)
    _echo_config(cfg, Path(args.out), evolve=vars(args))
    return EXIT_OK


def cmd_asymptote(args, cfg):
    r = _read_r(args.r)
    xg = Grid1D.from_bounds(args.xmin, args.xmax, args.nx)
    qas = asymptotic_profile_on_grid(r, xg.nodes, args.t, cfg.t_min)
    write_field(args.out, ComplexField(xg, qas))
    _echo_config(cfg, Path(args.out), asymptote=vars(args))
    return EXIT_OK


def _spec_from(args, cfg):
    """Flags win, then the ``--config`` file, then the module defaults."""
    from .perturbation import DEFAULT_EPSILON, DEFAULT_L, PerturbationSpec

    use_cfg = bool(getattr(args, "config", None))
    eps = args.epsilon if args.epsilon is not None else (cfg.epsilon if use_cfg else DEFAULT_EPSILON)
    l = args.l if args.l is not None else (cfg.l if use_cfg else DEFAULT_L)
    profile = args.profile or (cfg.perturbation if use_cfg else "gaussian:1.0")
    return PerturbationSpec.parse_profile(profile, epsilon=eps, l=l)


def cmd_perturb(args, cfg):
    from .perturbation import evolve_perturbed, inner_grid, picard_solve

    r0 = _read_r(args.r0)
    spec = _spec_from(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    xg = inner_grid(spec, count=args.inner_nodes)
    status = EXIT_OK
    try:
        if args.picard:
            traj = picard_solve(r0, spec, args.T, args.steps, xg, rhp_tol=cfg.rhp_tol)
        else:
            traj = evolve_perturbed(r0, spec, args.T, args.steps, xg, tol=cfg.rhp_tol)
    except InstabilityError as exc:
        log.error("%s", exc)
        traj, status = exc.trajectory, EXIT_ACCEPTANCE
    for k, snap in enumerate(traj.snapshots):
        write_field(out / f"r_{k:04d}.csv", snap.r)
    with open(out / "norms.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "h11", "sup", "f_h11"))
        for row in zip(traj.times, traj.h11_norms, traj.sup_norms, traj.f_norm_log):
            w.writerow([repr(float(v)) for v in row])
    _echo_config(cfg, out, perturb=vars(args), inner_grid=[xg.origin, xg.end, xg.count])
    if status == EXIT_OK and not traj.bounds_hold():
        status = EXIT_ACCEPTANCE
    return status


def cmd_pde(args, cfg):
    from .pde import mass_drift, run

    q0 = read_field(args.q0)
    spec = _spec_from(args, cfg)
    state = run(q0, spec, args.T, args.dt)
    write_field(args.out, state.q)
    if args.mass_trace:
        with open(args.mass_trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "mass"))
            for t, m in state.mass_trace:
                w.writerow((repr(float(t)), repr(float(m))))
    _echo_config(cfg, Path(args.out), pde=vars(args))
    print(f"mass drift = {mass_drift(state):.3g}")
    return EXIT_OK


def _report_rows_fit(quantity, fit, window):
    ok = abs(fit.exponent - fit.target) <= window
    return [(quantity, t, v, fit.exponent, fit.target, ok) for t, v in zip(fit.times, fit.values)]


def verify_bounds(suite: str, cfg: ExperimentConfig, l: float | None = None) -> list[tuple]:
    """Rows ``(quantity, t, value, fitted_exponent, target_exponent, pass)``."""
    from . import estimates as est
    from .perturbation import PerturbationSpec

    rows = []
    if suite == "ltg":
        pcfg = est.ProbeConfig(spec=PerturbationSpec(epsilon=0.0, l=l or 4.0))
        for quantity in ("LG_l2", "LG_l1"):
            rows += _report_rows_fit(quantity, est.decay_probe(quantity, pcfg), est.EXPONENT_WINDOW)
    elif suite == "fdecay":
        pcfg = est.ProbeConfig(spec=PerturbationSpec(epsilon=0.0, l=l or 5.0), times=(1, 2, 4, 8, 16),
                               inner_count=64)
        rows += _report_rows_fit("F_h11", est.decay_probe("F_h11", pcfg), est.EXPONENT_WINDOW)
    elif suite == "minf":
        r = reflection_coefficient(cfg.initial_field(), cfg.z_grid.grid())
        probe = est.m_infinity_probe(r, zgrid_for_t=lambda t: est.z_grid_for(cfg.z_grid.hi, t, xmax=4 * t))
        ok = probe.slope <= est.M_INF_SLOPE_MAX
        rows += [("M_inf", t, v, -probe.slope, 0.0, ok) for t, v in zip(probe.times, probe.per_time_max)]
    elif suite == "resolvent":
        for case in est.resolvent_suite():
            rows.append((f"resolvent_a{case.amplitude:g}_x{case.x:g}", case.t, case.norm,
                         float("nan"), case.bound, case.passes))
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return rows


def cmd_verify_bounds(args, cfg):
    rows = verify_bounds(args.suite, cfg, args.l)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for q, t, v, fe, te, ok in rows:
            w.writerow((q, repr(float(t)), repr(float(v)), repr(float(fe)), repr(float(te)), int(bool(ok))))
    _echo_config(cfg, out, verify_bounds=vars(args))
    bad = [r for r in rows if not r[5]]
    print(f"{len(rows) - len(bad)}/{len(rows)} rows pass")
    return EXIT_OK if not bad else EXIT_ACCEPTANCE


def cmd_compare(args, cfg):
    from .compare import compare, write_report

    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.validate(check_rho=True)
    cfg.dump(out / "config.json")
    rep = compare(cfg)
    write_report(out / "compare.csv", rep.rows)
    with open(out / "summary.json", "w") as fh:
        json.dump({"exponent": rep.exponent, "spread": rep.spread, "passes": rep.passes}, fh, indent=2)
        fh.write("\n")
    for row in rep.rows:
        print(f"t={row.t:g} sup|q-qas|={row.err_pde_qas:.4g} scaled={row.scaled_pde_qas:.4g} {row.status}")
    print(f"fitted exponent {rep.exponent:.3f}, spread {rep.spread:.3f}: {'PASS' if rep.passes else 'FAIL'}")
    if any(row.status != "ok" for row in rep.rows):
        return EXIT_SOLVER
    return EXIT_OK if rep.passes else EXIT_ACCEPTANCE


# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pnls", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    p.add_argument("--config", help="JSON ExperimentConfig")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scatter", help="q(x) -> r(z)")
    s.add_argument("--input", required=True)
    s.add_argument("--zmin", type=float, default=-8.0)
    s.add_argument("--zmax", type=float, default=8.0)
    s.add_argument("--nz", type=int, default=1024)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("reconstruct", help="r(z) -> q(x, t)")
    s.add_argument("--r", required=True)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--xmin", type=float, default=-20.0)
    s.add_argument("--xmax", type=float, default=20.0)
    s.add_argument("--nx", type=int, default=512)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("evolve", help="r(z) e^{-itz^2}")
    s.add_argument("--r", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("asymptote", help="long-time profile q_as(x, t)")
    s.add_argument("--r", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--xmin", type=float, default=-40.0)
    s.add_argument("--xmax", type=float, default=40.0)
    s.add_argument("--nx", type=int, default=256)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_asymptote)

    s = sub.add_parser("perturb", help="perturbed evolution of r")
    s.add_argument("--r0", required=True)
    s.add_argument("--epsilon", type=float, default=None, help="default 1e-3")
    s.add_argument("--l", type=float, default=None, help="default 4")
    s.add_argument("--profile", default=None, help="gaussian:SCALE, sech2:SCALE or custom:FILE")
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--steps", type=int, default=64)
    s.add_argument("--inner-nodes", type=int, default=256)
    s.add_argument("--picard", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("pde", help="split-step oracle")
    s.add_argument("--q0", required=True)
    s.add_argument("--epsilon", type=float, default=None, help="default 1e-3")
    s.add_argument("--l", type=float, default=None, help="default 4")
    s.add_argument("--profile", default=None, help="gaussian:SCALE, sech2:SCALE or custom:FILE")
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--out", required=True)
    s.add_argument("--mass-trace", default=None)
    s.set_defaults(func=cmd_pde)

    s = sub.add_parser("verify-bounds", help="empirical decay and boundedness checks")
    s.add_argument("--suite", choices=("ltg", "minf", "fdecay", "resolvent"), required=True)
    s.add_argument("--l", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("compare", help="PDE vs IST vs q_as over a time sweep")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    threads = cfg.threads if args.threads is None else args.threads
    if threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    ctx = sfft.set_workers(threads) if threads > 1 else nullcontext()
    try:
        with ctx:
            return args.func(args, cfg)
    except (SolverFailure, FEvaluationError, IntegratorFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, InvalidFieldError, TruncationError, DomainError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
