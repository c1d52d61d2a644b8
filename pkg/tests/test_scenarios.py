from dataclasses import replace

import numpy as np
import pytest

from Core.errors import ParameterError, PinningError, PreconditionError
from Core.params import ModelParams, regularization_floor
from Core.state import EulerianField
from Utils.scenarios import (PRESETS, UNVERIFIED_FLAG, ScenarioKind, ScenarioSpec, VelocityInit, build_field,
                             build_initial_state, get_preset, ic_custom, ic_piece_vacuum, ic_point_vacuum,
                             ic_smooth_dirichlet, ic_smooth_periodic, load_profile, momentum_moment,
                             project_to_grid, regularize_ic)


POINT = ScenarioSpec(kind=ScenarioKind.POINT_VACUUM, sigma=2.0, x0=0.5, bc="dirichlet")
PIECE = ScenarioSpec(kind=ScenarioKind.PIECE_VACUUM, sigma=2.0, x0=0.4, x1=0.6, bc="dirichlet")


# ============================================================================
# CONSTRUCTORS
# ============================================================================

def test_point_vacuum_is_normalized_power_law(shallow_water):
    f = ic_point_vacuum(POINT, shallow_water)
    assert f.mass == pytest.approx(1.0, abs=1e-12)
    assert f.scale == pytest.approx(12.0, rel=1e-6)
    np.testing.assert_allclose(f.rho, f.scale * np.abs(f.midpoints - 0.5) ** 2, rtol=1e-12)
    assert f.vacuum_at == 0.5


def test_point_vacuum_envelope_constants_average(shallow_water):
    # 2|x - 1/2|^2 has mass 1/6 before normalization
    f = ic_point_vacuum(replace(POINT, A0=2.0, A1=2.0), shallow_water)
    assert 1.0 / f.scale == pytest.approx(1 / 6, rel=1e-6)
    np.testing.assert_allclose(f.rho, 12.0 * np.abs(f.midpoints - 0.5) ** 2, rtol=1e-5)


def test_point_vacuum_sigma_outside_window(shallow_water):
    with pytest.raises(ParameterError) as info:
        ic_point_vacuum(replace(POINT, sigma=0.5), shallow_water)
    assert info.value.context['sigma_minus'] == pytest.approx(1.0)
    assert info.value.context['sigma_plus'] == pytest.approx(3.0)


def test_point_vacuum_default_sigma_is_window_midpoint(shallow_water):
    f = ic_point_vacuum(replace(POINT, sigma=None), shallow_water)
    assert f.scale == pytest.approx(12.0, rel=1e-6)


def test_point_vacuum_with_velocity_is_flagged(shallow_water):
    spec = replace(POINT, u0_spec=VelocityInit.SINUSOIDAL, u0_amplitude=0.1)
    f = ic_point_vacuum(spec, shallow_water)
    assert UNVERIFIED_FLAG in f.flags
    assert f.u[0] == 0.0 and f.u[-1] == 0.0


def test_piece_vacuum_mass_and_block(shallow_water):
    f = ic_piece_vacuum(PIECE, shallow_water)
    # unnormalized mass is 2 * 0.4^3 / 3
    assert 1.0 / f.scale == pytest.approx(0.0426667, rel=1e-4)
    assert f.mass == pytest.approx(1.0, abs=1e-12)
    block = (f.midpoints > 0.4) & (f.midpoints < 0.6)
    assert np.all(f.rho[block] == 0.0)
    assert np.all(f.rho[~block] >= 0.0)


def test_smooth_constructors_have_unit_mass():
    spec = ScenarioSpec()
    periodic = ic_smooth_periodic(spec)
    dirichlet = ic_smooth_dirichlet(replace(spec, bc="dirichlet"))
    assert periodic.mass == pytest.approx(1.0, abs=1e-12)
    assert dirichlet.mass == pytest.approx(1.0, abs=1e-12)
    assert periodic.vacuum_at is None


def test_custom_momentum_on_vacuum_is_rejected():
    spec = ScenarioSpec(kind=ScenarioKind.CUSTOM, resolution=100)
    with pytest.raises(PreconditionError):
        ic_custom(spec, lambda m: np.where(np.abs(m - 0.5) < 0.1, 0.0, 1.0), lambda x: np.ones_like(x))


def test_custom_negative_density_is_rejected():
    with pytest.raises(ParameterError):
        ic_custom(ScenarioSpec(resolution=10), lambda m: m - 0.5)


def write_profile(path, x, rho, u=None):
    header = "x,rho,u" if u is not None else "x,rho"
    rows = [f"{xi!r},{ri!r}" + (f",{u[i]!r}" if u is not None else "") for i, (xi, ri) in enumerate(zip(x, rho))]
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return str(path)


def test_profile_interpolates_the_table(tmp_path):
    x = np.linspace(0.0, 1.0, 11)
    path = write_profile(tmp_path / "ramp.csv", x, 1.0 + x, u=0.1 * np.sin(np.pi * x))
    spec = ScenarioSpec(kind=ScenarioKind.CUSTOM, profile=path, resolution=200, bc="free-both")
    f = build_field(spec, ModelParams())
    assert f.mass == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(f.rho / f.scale, 1.0 + f.midpoints, rtol=1e-12)
    np.testing.assert_allclose(f.u, 0.1 * np.interp(f.x, x, np.sin(np.pi * x)), atol=1e-15)


def test_profile_without_velocity_starts_at_rest(tmp_path):
    x = np.linspace(0.0, 1.0, 5)
    path = write_profile(tmp_path / "flat.csv", x, np.full(5, 2.0))
    s = build_initial_state(ScenarioSpec(kind=ScenarioKind.CUSTOM, profile=path, N=10, bc="dirichlet"),
                            ModelParams())
    np.testing.assert_allclose(s.rho, 1.0)
    assert np.all(s.u == 0.0)


def test_custom_kind_needs_profile():
    with pytest.raises(PreconditionError):
        build_field(ScenarioSpec(kind=ScenarioKind.CUSTOM), ModelParams())


@pytest.mark.parametrize("text", ["x,density\n0,1\n1,1\n", "x,rho\n0,1\n0.5,1\n", "x,rho\n0,1\n0.5,oops\n1,1\n",
                                  "x,rho\n0,1\n0.6,1\n0.4,1\n1,1\n"])
def test_malformed_profiles(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(PreconditionError):
        load_profile(str(path))


def test_missing_profile_file(tmp_path):
    with pytest.raises(PreconditionError):
        load_profile(str(tmp_path / "absent.csv"))


def test_momentum_moment_of_uniform_flow():
    f = EulerianField(x=np.linspace(0.0, 1.0, 5), rho=np.full(4, 2.0), u=np.full(5, 0.5))
    assert momentum_moment(f, nu=1.0) == pytest.approx(2.0 * 0.5 ** 3)
    assert momentum_moment(f.with_fields(u=np.zeros(5)), nu=1.0) == 0.0


def test_momentum_moment_must_be_finite():
    f = EulerianField(x=np.linspace(0.0, 1.0, 3), rho=np.ones(2), u=np.array([0.0, np.inf, 0.0]))
    with pytest.raises(PreconditionError):
        momentum_moment(f, nu=1.0)


# ============================================================================
# REGULARIZATION
# ============================================================================

def test_regularize_with_zero_eps_is_a_flagged_noop(shallow_water):
    f = ic_point_vacuum(POINT, shallow_water)
    out = regularize_ic(f, shallow_water)
    assert "regularization-noop" in out.flags
    np.testing.assert_array_equal(out.rho, f.rho)


def test_regularize_lifts_to_floor(shallow_water):
    p = replace(shallow_water, eps=1e-4, theta=0.25)
    floor = regularization_floor(p)
    assert floor == pytest.approx(2.154e-3, rel=1e-3)

    out = regularize_ic(ic_point_vacuum(POINT, shallow_water), p)
    assert out.rho.min() >= floor * (1 - 1e-12)
    assert out.mass == pytest.approx(1.0, abs=1e-12)
    assert out.vacuum_at is None
    assert "regularized" in out.flags


def test_regularization_distance_shrinks_with_eps(shallow_water):
    f = ic_point_vacuum(POINT, shallow_water)
    distances = []
    for eps in (1e-2, 1e-3, 1e-4, 1e-5):
        out = regularize_ic(f, replace(shallow_water, eps=eps, theta=0.25))
        distances.append(float(np.sum(np.abs(out.rho - f.rho) * f.widths)))
    assert all(b < a for a, b in zip(distances[:-1], distances[1:]))


def test_regularize_rejects_bad_theta(shallow_water):
    with pytest.raises(PreconditionError):
        regularize_ic(ic_point_vacuum(POINT, shallow_water), replace(shallow_water, eps=1e-3, theta=0.7))


# ============================================================================
# PROJECTION
# ============================================================================

def test_projection_of_uniform_density():
    f = ic_custom(ScenarioSpec(bc="dirichlet", resolution=100), np.ones_like)
    s = project_to_grid(f, 5)
    np.testing.assert_allclose(s.rho, 1.0, rtol=1e-12)
    assert s.h == pytest.approx(0.2)
    assert s.u.size == 6


def test_projection_pins_centre_cell(shallow_water):
    s = project_to_grid(ic_point_vacuum(POINT, shallow_water), 5, pinned_request=True)
    assert s.pinned_cell == 2
    assert s.rho[2] == 0.0
    assert np.all(np.delete(s.rho, 2) > 0)


@pytest.mark.parametrize("N", [4, 6])
def test_pinning_needs_odd_cell_count(N, shallow_water):
    with pytest.raises(PinningError):
        project_to_grid(ic_point_vacuum(POINT, shallow_water), N, pinned_request=True)


def test_pinning_needs_vacuum():
    with pytest.raises(PinningError):
        project_to_grid(ic_smooth_periodic(ScenarioSpec()), 5, pinned_request=True)


def test_pinning_needs_centred_vacuum(shallow_water):
    f = ic_point_vacuum(replace(POINT, x0=0.3), shallow_water)
    with pytest.raises(PinningError):
        project_to_grid(f, 5, pinned_request=True)


# ============================================================================
# PRESETS
# ============================================================================

def test_preset_names():
    assert set(PRESETS) == {"shallow-water-point-vacuum", "shallow-water-piece-vacuum",
                            "smooth-periodic", "smooth-dirichlet"}


def test_unknown_preset():
    with pytest.raises(ParameterError):
        get_preset("dam-break")


def test_point_vacuum_preset_builds_regularized_state():
    preset = get_preset("shallow-water-point-vacuum")
    s = build_initial_state(preset.scenario, preset.params)
    assert s.n_cells == 201
    assert s.h * s.n_cells == pytest.approx(1.0)
    assert s.pinned_cell is None
    assert s.u[0] == 0.0 and s.u[-1] == 0.0
    assert s.rho.min() >= regularization_floor(preset.params) * (1 - 1e-9)


def test_pinned_build_without_regularization():
    spec = replace(POINT, N=21, pinned=True)
    s = build_initial_state(spec, ModelParams(alpha=1.0, gamma=2.0))
    assert s.pinned_cell == 10
    assert s.rho[10] == 0.0
