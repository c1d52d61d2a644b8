import math

import numpy as np
import pytest

from Core.errors import CoverageError, EmptyWindowError, InsufficientSamplesError
from Core.params import ModelParams
from Core.state import EulerianField, StaggeredState
from Utils.coords import lagrangian_to_eulerian
from Utils.diagnostics import (DiagnosticsConfig, DiagnosticsHistory, DiagnosticsRecord, blowup_indicator,
                               blowup_window, decay_fit, default_b, density_upper_bound, energy, envelope_fit,
                               equilibrium, g_functional, g_functional_field, node_gradient, node_weights,
                               resolve_config, sample, step_rates, vacuum_vanish_time, velocity_gradient_field,
                               velocity_moment)

from conftest import random_state, record, uniform_state


def series_of(times, **columns):
    return [record(t, **{name: values[i] for name, values in columns.items()})
            for i, t in enumerate(times)]


def sample_state(s, p):
    return sample(s, p, resolve_config(None, s, p), DiagnosticsHistory(origin0=s.origin))


# ============================================================================
# SAMPLE
# ============================================================================

def test_uniform_rest_sample(shallow_water):
    record = sample_state(uniform_state(10), shallow_water)
    assert record.energy == pytest.approx(1.0)
    assert record.bd_entropy == pytest.approx(1.0)
    assert record.volume == pytest.approx(1.0)
    assert record.mass == pytest.approx(1.0)
    assert record.g_val == pytest.approx(0.0, abs=1e-30)
    assert record.l2_dist == pytest.approx(0.0, abs=1e-14)
    assert record.ux_linf == 0.0
    assert record.pinned_cell == -1


def test_uniform_translation_sample(shallow_water):
    s = uniform_state(10, u=1.0)
    record = sample_state(s, shallow_water)
    assert record.energy == pytest.approx(1.5)
    assert equilibrium(s) == pytest.approx((1.0, 1.0))
    assert record.l2_dist == pytest.approx(0.0, abs=1e-14)


def test_dirichlet_equilibrium_velocity_is_zero(rng):
    _, u_s = equilibrium(random_state(rng, 9, bc="dirichlet"))
    assert u_s == 0.0


def test_pinned_cell_excluded_from_min_rho(rng, shallow_water):
    s = random_state(rng, 11, bc="dirichlet", pinned=True)
    record = sample_state(s, shallow_water)
    assert record.min_rho == pytest.approx(np.min(np.delete(s.rho, s.pinned_cell)))
    assert record.pinned_cell == s.pinned_cell
    assert record.mass == pytest.approx(s.n_cells * s.h, rel=1e-12)


def test_energy_ignores_pinned_cell(rng, shallow_water):
    s = random_state(rng, 11, bc="dirichlet", pinned=True)
    filled = s.with_fields(rho=np.where(s.active_mask, s.rho, 1.0), pinned_cell=None)
    assert energy(s, shallow_water) == pytest.approx(energy(filled, shallow_water) - shallow_water.a1 * s.h)


def test_record_field_names_lead_with_time():
    names = DiagnosticsRecord.field_names()
    assert names[0] == 't'
    assert 'energy_pi' in names and 'anchor_drift' in names


# ============================================================================
# VELOCITY GRADIENT AND g
# ============================================================================

def test_velocity_gradient_of_linear_ramp():
    s = StaggeredState(h=1 / 3, t=0.0, rho=np.ones(3), u=[0.0, 0.3, 0.6, 0.9], bc="free-right")
    ux = velocity_gradient_field(s)
    np.testing.assert_allclose(ux, 0.9)


def test_velocity_gradient_zero_on_pinned_cell(rng):
    s = random_state(rng, 11, bc="dirichlet", pinned=True)
    assert velocity_gradient_field(s)[s.pinned_cell] == 0.0


def test_default_b():
    assert default_b(ModelParams(alpha=1.0, gamma=2.0)) == pytest.approx(3.0)
    assert default_b(ModelParams(alpha=0.6, gamma=3.0)) == pytest.approx(2.6)


def test_two_cell_g_functional():
    f = EulerianField(x=[0.0, 0.5, 1.0], rho=[0.0, 2.0], u=np.zeros(3))
    assert g_functional_field(f, 1.0) == pytest.approx(1.0)


def test_density_upper_bound():
    assert density_upper_bound(1.0, 1.0) == pytest.approx(3.0)
    assert density_upper_bound(2.0, 2.0) == pytest.approx(2.0)


def test_g_functional_is_reflection_invariant(rng, shallow_water):
    s = random_state(rng, 17, bc="dirichlet")
    mirrored = s.with_fields(rho=s.rho[::-1].copy(), u=-s.u[::-1])
    assert g_functional(mirrored, shallow_water) == pytest.approx(g_functional(s, shallow_water), rel=1e-12)
    assert g_functional(s, shallow_water) > 0


@pytest.mark.parametrize("bc", ["dirichlet", "free-both", "periodic"])
def test_lagrangian_ux_matches_eulerian_slope(rng, shallow_water, bc):
    s = random_state(rng, 13, bc=bc)
    f = lagrangian_to_eulerian(s)
    eulerian = np.max(np.abs(np.diff(f.u) / f.widths))
    assert step_rates(s, shallow_water).ux_linf == pytest.approx(eulerian, rel=1e-12)
    assert sample_state(s, shallow_water).ux_linf == pytest.approx(eulerian, rel=1e-12)


# ============================================================================
# NODE GRADIENTS AND RATES
# ============================================================================

def test_node_gradient_of_linear_data_is_exact_at_the_ends():
    s = uniform_state(5, bc="dirichlet")
    grad = node_gradient(s, 3.0 * np.arange(5))
    assert grad.size == s.n_nodes
    np.testing.assert_allclose(grad, 3.0 / s.h)


def test_node_gradient_periodic_wraps():
    s = uniform_state(4)
    grad = node_gradient(s, np.array([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_allclose(grad * s.h, [-3.0, 1.0, 1.0, 1.0])


def test_node_weights_sum_to_mass():
    for bc in ("dirichlet", "free-left", "periodic"):
        s = uniform_state(8, bc=bc)
        assert np.sum(node_weights(s)) == pytest.approx(s.n_cells * s.h)


@pytest.mark.parametrize("bc", ["dirichlet", "free-right", "periodic"])
def test_step_rates_match_direct_sums(rng, bc):
    p = ModelParams(alpha=1.2, gamma=1.5, a1=0.7, a2=1.3, eps=1e-3, theta=0.25)
    s = random_state(rng, 12, bc=bc)
    rho, h = s.rho, s.h
    jumps = np.diff(np.append(s.u, s.u[0])) if s.bc.is_periodic else np.diff(s.u)
    k = p.a2 * rho ** (1 + p.alpha) + p.eps * rho ** (1 + p.theta)
    dissipation = np.sum(k * (jumps / h) ** 2) * h

    if s.bc.is_periodic:
        rho_node = 0.5 * (rho + np.roll(rho, 1))
    else:
        rho_node = np.concatenate(([rho[0]], 0.5 * (rho[1:] + rho[:-1]), [rho[-1]]))
    w = p.a2 * rho_node ** (p.gamma + p.alpha - 2) + p.eps * rho_node ** (p.gamma + p.theta - 2)
    pressure = np.sum(p.a1 * p.gamma * w * node_gradient(s, rho) ** 2 * node_weights(s))

    rates = step_rates(s, p)
    assert rates.dissipation == pytest.approx(dissipation, rel=1e-12)
    assert rates.ux_linf == pytest.approx(np.max(np.abs(rho * jumps / h)), rel=1e-12)
    assert rates.bd_dissipation == pytest.approx(dissipation + pressure, rel=1e-12)


def test_velocity_moment_of_uniform_flow():
    assert velocity_moment(uniform_state(10, u=0.5), nu=1.0) == pytest.approx(0.5 ** 3)
    assert velocity_moment(uniform_state(10, bc="dirichlet", u=0.5), nu=1.0) == pytest.approx(0.9 * 0.5 ** 3)


def test_sample_reports_velocity_moment(rng):
    p = ModelParams(nu=0.5)
    s = random_state(rng, 9)
    assert sample_state(s, p).u_moment == pytest.approx(np.sum(np.abs(s.u) ** 2.5) * s.h)


# ============================================================================
# VACUUM VANISHING
# ============================================================================

def test_vacuum_vanishes_after_threshold_is_held():
    t = np.arange(0.0, 5.01, 0.5)
    series = series_of(t, min_rho=np.where(t < 2.0, 0.01, 0.1))
    assert vacuum_vanish_time(series, rho_thresh=0.05, hold=1.0) == pytest.approx(2.0)


def test_vacuum_dip_restarts_the_hold():
    t = np.arange(0.0, 5.01, 0.5)
    min_rho = np.full(t.size, 0.1)
    min_rho[:2] = 0.01
    min_rho[3] = 0.01
    series = series_of(t, min_rho=min_rho)
    assert vacuum_vanish_time(series, rho_thresh=0.05, hold=1.0) == pytest.approx(2.0)


def test_vacuum_never_vanishes():
    t = np.arange(0.0, 3.01, 0.5)
    assert vacuum_vanish_time(series_of(t, min_rho=np.zeros(t.size)), 0.05, 1.0) is None


def test_vacuum_hold_needs_series_coverage():
    t = np.arange(0.0, 3.01, 0.5)
    min_rho = np.where(t >= 2.5, 0.1, 0.0)
    assert vacuum_vanish_time(series_of(t, min_rho=min_rho), 0.05, 1.0) is None


# ============================================================================
# BLOW-UP INDICATOR
# ============================================================================

def test_blowup_indicator_constant():
    t = np.linspace(0.0, 10.0, 101)
    report = blowup_indicator(series_of(t, ux_linf=np.full(t.size, 3.0)), t1=2.0, eta=2.0)
    assert report.integral == pytest.approx(6.0)
    assert report.peak == pytest.approx(3.0)


def test_blowup_indicator_near_singular_profile():
    t1 = 1.0
    t = np.linspace(0.0, 2.0, 20001)
    ux = 1.0 / (np.abs(t - t1) + 0.01)
    report = blowup_indicator(series_of(t, ux_linf=ux), t1=t1, eta=0.1)
    assert report.integral == pytest.approx(math.log(11.0), rel=0.01)
    assert report.peak == pytest.approx(100.0)
    assert report.peak_time == pytest.approx(t1)


def test_blowup_window_clips_to_series_start():
    assert blowup_window(3.0, 1.0, 0.0) == pytest.approx((2.0, 1.0))
    assert blowup_window(0.4, 1.0, 0.0) == pytest.approx((0.0, 0.4))
    assert blowup_window(0.0, 1.0, 0.0) is None


def test_blowup_indicator_requires_coverage():
    t = np.linspace(0.0, 1.0, 11)
    with pytest.raises(CoverageError):
        blowup_indicator(series_of(t, ux_linf=np.ones(t.size)), t1=0.5, eta=1.0)


# ============================================================================
# DECAY FIT
# ============================================================================

def test_decay_fit_exact_exponential():
    t = np.arange(0.0, 10.01, 0.5)
    series = series_of(t, l2_dist=2.0 * np.exp(-0.5 * t))
    fit = decay_fit(series, t_start=0.0)
    assert fit.c0 == pytest.approx(2.0, rel=1e-10)
    assert fit.mu0 == pytest.approx(0.5, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0)
    assert not fit.degenerate


def test_decay_fit_offsets_time_origin():
    t = np.arange(0.0, 10.01, 0.5)
    fit = decay_fit(series_of(t, l2_dist=2.0 * np.exp(-0.5 * t)), t_start=2.0)
    assert fit.c0 == pytest.approx(2.0 * math.exp(-1.0), rel=1e-10)
    assert fit.n_samples == 17


def test_decay_fit_constant_series_is_degenerate():
    t = np.arange(0.0, 5.01, 0.5)
    fit = decay_fit(series_of(t, l2_dist=np.full(t.size, 0.3)), t_start=0.0)
    assert fit.degenerate
    assert fit.mu0 == 0.0
    assert fit.r2 == 0.0


def test_decay_fit_tolerates_noise(rng):
    t = np.arange(0.0, 20.0, 0.1)
    y = np.exp(-0.8 * t) * np.exp(rng.normal(0.0, 0.01, t.size))
    fit = decay_fit(series_of(t, l2_dist=y), t_start=0.0)
    assert fit.mu0 == pytest.approx(0.8, rel=0.05)
    assert fit.r2 > 0.99


def test_decay_fit_excludes_non_positive_samples():
    t = np.arange(0.0, 5.01, 0.5)
    y = np.exp(-t)
    y[-1] = 0.0
    fit = decay_fit(series_of(t, l2_dist=y), t_start=0.0)
    assert fit.excluded == 1
    assert fit.mu0 == pytest.approx(1.0)


def test_decay_fit_needs_enough_samples():
    t = np.arange(0.0, 2.01, 0.5)
    with pytest.raises(InsufficientSamplesError):
        decay_fit(series_of(t, l2_dist=np.exp(-t)), t_start=0.5)


# ============================================================================
# ENVELOPE FIT
# ============================================================================

def power_law_field(coefficient: float = 1.0, m: int = 1000) -> EulerianField:
    x = np.linspace(0.0, 1.0, m + 1)
    mid = 0.5 * (x[:-1] + x[1:])
    return EulerianField(x=x, rho=coefficient * np.abs(mid - 0.5) ** 2, u=np.zeros(m + 1))


def test_envelope_of_exact_power_law():
    fit = envelope_fit(power_law_field(), 0.5, sigma=2.0, window=0.1)
    assert fit.a_minus == pytest.approx(1.0, rel=1e-10)
    assert fit.a_plus == pytest.approx(1.0, rel=1e-10)
    assert fit.sigma_used == 2.0


def test_envelope_is_homogeneous():
    fit = envelope_fit(power_law_field(2.0), 0.5, sigma=2.0, window=0.1)
    assert fit.a_minus == pytest.approx(2.0, rel=1e-10)
    assert fit.a_plus == pytest.approx(2.0, rel=1e-10)


def test_envelope_reports_reference_violation():
    fit = envelope_fit(power_law_field(2.0), 0.5, sigma=2.0, window=0.1, a_ref_minus=1.0, a_ref_plus=1.5)
    assert fit.max_violation == pytest.approx(1 / 3)


def test_envelope_window_without_cells():
    with pytest.raises(EmptyWindowError):
        envelope_fit(power_law_field(), 0.5, sigma=2.0, window=1e-4)
