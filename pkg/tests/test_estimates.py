import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnls.errors import DegenerateFitError, DomainError
from pnls.estimates import (ProbeConfig, decay_probe, fit_decay, ltilde_g, ltilde_g_norms,
                            m_infinity_probe, target_exponent, z_grid_for)
from pnls.grids import ComplexField, Grid1D
from pnls.perturbation import PerturbationSpec
from pnls.scattering import ReflectionData


# --- fits ----------------------------------------------------------------------
@given(st.floats(-3, 3), st.floats(1e-6, 1e6))
@settings(max_examples=30, deadline=None)
def test_fit_recovers_power_law(k, c):
    t = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    fit = fit_decay(t, c * t ** -k, target=k)
    assert abs(fit.exponent - k) <= 1e-9
    assert fit.passes(window=1e-6)
    assert abs(fit.prefactor / c - 1) <= 1e-9
    assert 0.0 <= fit.r2 <= 1.0


def test_fit_two_points_and_quality():
    fit = fit_decay([1, 4], [1.0, 0.25])
    assert fit.exponent == pytest.approx(1.0, abs=1e-14) and fit.r2 == 1.0
    assert not fit.passes()  # no target
    noisy = fit_decay([1, 2, 4, 8], [1.0, 0.3, 0.4, 0.1])
    assert noisy.r2 < 0.95


@pytest.mark.parametrize("times, values", [
    ([1, 2], [1.0, 0.0]), ([1, 2], [1.0, -1.0]), ([2, 1], [1.0, 2.0]), ([1], [1.0]),
    ([1, 2, 4], [1.0, np.nan, 1.0]), ([0, 1], [1.0, 1.0])])
def test_fit_rejects_degenerate_input(times, values):
    with pytest.raises(DegenerateFitError):
        fit_decay(times, values)


def test_target_exponents():
    assert target_exponent("LG_l2", 4) == 1.5
    assert target_exponent("LG_l1", 4) == 1.5
    assert target_exponent("F_h11", 5) == 2.0
    assert target_exponent("DeltaF_h11", 4, 2.0) == pytest.approx(1.5)


# --- L G -------------------------------------------------------------------------
GRID = Grid1D.from_bounds(-12, 12, 1024)


def test_ltilde_g_zero():
    spec = PerturbationSpec(l=4)
    out = ltilde_g(ComplexField.zeros(GRID), None, spec, 3.0)
    assert not np.any(out.values)


@pytest.mark.parametrize("t", [0.0, 0.7, 5.0])
@pytest.mark.parametrize("l", [4.0, 5.0])
def test_ltilde_g_closed_form(t, l):
    # q = a = e^{-x^2}: D q = D a = (i x + 4 t x) e^{-x^2}, Re(conj q D q) = 4 t x e^{-2x^2}, so
    # beta = e^{-(l+2)x^2} (2 (i x + 4 t x) + 4 l t x)
    spec = PerturbationSpec(l=l)
    q = ComplexField.from_function(GRID, lambda x: np.exp(-x * x))
    out = ltilde_g(q, None, spec, t).values
    x = np.linspace(-1.5, 1.5, 8)
    idx = np.searchsorted(GRID.nodes, x)
    xs = GRID.nodes[idx]
    beta = np.exp(-(l + 2) * xs ** 2) * (2 * (1j * xs + 4 * t * xs) + 4 * l * t * xs)
    assert np.max(np.abs(out[0, 1, idx] - (-1j * beta))) <= 1e-10
    assert np.max(np.abs(out[1, 0, idx] - (1j * np.conj(beta)))) <= 1e-10
    assert not np.any(out[0, 0]) and not np.any(out[1, 1])


def test_ltilde_g_explicit_derivative_matches_spectral():
    spec = PerturbationSpec(l=4)
    q = ComplexField.from_function(GRID, lambda x: 0.4 * np.exp(-x * x) * np.exp(0.5j * x))
    qx = ComplexField.from_function(GRID, lambda x: 0.4 * (-2 * x + 0.5j) * np.exp(-x * x) * np.exp(0.5j * x))
    a = ltilde_g(q, None, spec, 2.0).values
    b = ltilde_g(q, qx, spec, 2.0).values
    assert np.max(np.abs(a - b)) <= 1e-10


def test_ltilde_g_linear_in_profile():
    spec = PerturbationSpec(l=4, profile="sech2", scale=1.5)
    q = ComplexField.from_function(GRID, lambda x: 0.4 / np.cosh(x) * np.exp(0.3j * x))
    base = ltilde_g(q, None, spec, 1.3).values
    assert np.array_equal(ltilde_g(q, None, spec.scaled(2.0), 1.3).values, 2 * base)
    l2, l1 = ltilde_g_norms(q, spec, 1.3)
    l2b, l1b = ltilde_g_norms(q, spec.scaled(2.0), 1.3)
    assert l2b == pytest.approx(2 * l2, rel=1e-14) and l1b == pytest.approx(2 * l1, rel=1e-14)


# --- probes -------------------------------------------------------------------------
def test_z_grid_for():
    g = z_grid_for(8.0, 0.0, xmax=0.0)
    assert g.count == 512 and g.origin == -8.0
    g = z_grid_for(8.0, 16.0, xmax=8.0)
    assert g.count % 256 == 0
    # the node spacing resolves the phase x z - t z^2 over the grid
    assert g.spacing * (2 * 16 * 8 + 8) <= np.pi / 1.5 + 1e-12


def test_decay_probe_machinery():
    cfg = ProbeConfig(spec=PerturbationSpec(epsilon=0.0, l=5), times=(1.0, 2.0, 4.0), zmax=6.0,
                      min_nz=256, inner_count=32)
    fit = decay_probe("F_h11", cfg)
    assert fit.target == 2.0 and len(fit.values) == 3
    assert all(v > 0 for v in fit.values)
    assert fit.exponent > 0
    with pytest.raises(DomainError):
        decay_probe("nonsense", cfg)


def test_delta_f_probe_machinery():
    cfg = ProbeConfig(times=(1.0, 2.0), zmax=6.0, min_nz=256, inner_count=24)
    fit = decay_probe("DeltaF_h11", cfg)
    assert len(fit.values) == 2 and all(v > 0 for v in fit.values)


def test_m_infinity_trivial():
    zg = Grid1D.from_bounds(-6, 6, 256)
    r = ReflectionData.from_values(zg, np.zeros(256, complex))
    probe = m_infinity_probe(r, times=(1, 4))
    assert probe.per_time_max == (1.0, 1.0) and probe.slope == 0.0 and probe.passes()
