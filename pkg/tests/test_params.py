import math

import numpy as np
import pytest

from Core.errors import DomainError, EmptyWindowError, ParameterError
from Core.params import (ModelParams, NuWindow, beta_from_sigma, default_sigma, exponent_window,
                         internal_energy, mu_eps, nu_window, pi_fn, regularization_floor, sigma_from_beta,
                         specific_entropy, validate_params)


def test_shallow_water_params_are_admissible():
    check = validate_params(ModelParams(alpha=1.0, gamma=2.0, theta=0.25, n_reg=2))
    assert check.ok
    assert check.short_time


@pytest.mark.parametrize("params, constraint", [
    (ModelParams(alpha=0.5, gamma=2.0), "alpha > 1/2"),
    (ModelParams(alpha=1.0, gamma=0.4), "gamma > alpha/2"),
    (ModelParams(alpha=0.6, gamma=0.9), "gamma >= 1"),
    (ModelParams(eps=0.1, theta=0.6), "0 < theta < 1/2"),
    (ModelParams(n_reg=1), "n_reg >= 2"),
    (ModelParams(a1=0.0), "a1 > 0"),
])
def test_validate_params_names_the_violated_constraint(params, constraint):
    with pytest.raises(ParameterError) as info:
        validate_params(params)
    assert info.value.context['constraint'] == constraint


def test_short_time_flag_is_reported_not_rejected():
    check = validate_params(ModelParams(alpha=1.5, gamma=1.2))
    assert check.ok
    assert not check.short_time


@pytest.mark.parametrize("rho, gamma, expected", [(1.0, 1.0, 0.0), (1.0, 2.0, 1.0), (2.0, 2.0, 4.0), (0.0, 1.0, 0.0)])
def test_pi_fn(rho, gamma, expected):
    assert pi_fn(rho, gamma) == pytest.approx(expected)


@pytest.mark.parametrize("rho, gamma, expected", [(1.0, 2.0, 1.0), (0.0, 2.0, 0.0), (1.0, 1.0, 0.0)])
def test_specific_entropy(rho, gamma, expected):
    assert specific_entropy(rho, gamma) == pytest.approx(expected)


def test_specific_entropy_rejects_vacuum_for_isothermal():
    with pytest.raises(DomainError):
        specific_entropy(0.0, 1.0)


def test_specific_entropy_matches_pi_over_rho(rng):
    rho = rng.uniform(0.1, 3.0, 50)
    for gamma in (1.0, 1.4, 2.0):
        np.testing.assert_allclose(specific_entropy(rho, gamma), pi_fn(rho, gamma) / rho, rtol=1e-13, atol=1e-15)


def test_internal_energy_scales_with_pressure_coefficient():
    assert internal_energy(2.0, ModelParams(a1=3.0)) == pytest.approx(3.0 * specific_entropy(2.0, 2.0))


@pytest.mark.parametrize("rho, params, expected", [
    (0.0, ModelParams(eps=0.3), 0.0),
    (1.0, ModelParams(eps=0.1), 1.1),
    (4.0, ModelParams(alpha=1.0, theta=0.25, eps=0.5), 4.0 + 0.5 * 4.0 ** 0.25),
])
def test_mu_eps(rho, params, expected):
    assert mu_eps(rho, params) == pytest.approx(expected)


def test_mu_eps_reference_value():
    assert mu_eps(4.0, ModelParams(alpha=1.0, theta=0.25, eps=0.5)) == pytest.approx(4.7071, abs=1e-4)


@pytest.mark.parametrize("gamma", [1.0, 1.4, 2.0, 3.0])
def test_pi_fn_is_convex(gamma):
    rho = np.linspace(0.0, 4.0, 401)
    values = np.asarray(pi_fn(rho, gamma))
    second = values[2:] - 2 * values[1:-1] + values[:-2]
    assert np.all(second >= -1e-12)


@pytest.mark.parametrize("params", [ModelParams(), ModelParams(alpha=0.6, eps=0.2, theta=0.1),
                                    ModelParams(alpha=1.4, a2=0.3, eps=1e-3, theta=0.4)])
def test_mu_eps_is_increasing(params):
    values = np.asarray(mu_eps(np.linspace(0.0, 5.0, 501), params))
    assert np.all(np.diff(values) > 0)


@pytest.mark.parametrize("alpha, gamma", [(1.0, 2.0), (0.8, 1.3), (1.2, 2.0)])
def test_sigma_window_is_the_image_of_the_beta_window(alpha, gamma):
    window = exponent_window(alpha, gamma, 2)
    for sigma in np.linspace(0.05, 10.0, 400):
        beta = beta_from_sigma(sigma)
        assert window.contains_sigma(sigma) == (window.beta_minus < beta < window.beta_plus)
        assert window.contains_sigma(sigma) == (window.sigma_minus < sigma < window.sigma_plus)
    assert not window.contains_sigma(0.0)



def test_exponent_window_shallow_water():
    window = exponent_window(1.0, 2.0, 2)
    assert window.beta_minus == pytest.approx(0.5)
    assert window.beta_plus == pytest.approx(0.75)
    assert window.sigma_minus == pytest.approx(1.0)
    assert window.sigma_plus == pytest.approx(3.0)


def test_exponent_window_large_n_follows_formula():
    window = exponent_window(1.0, 2.0, 1000)
    assert window.beta_minus == pytest.approx(0.5)
    assert window.beta_plus == pytest.approx(min(1.0, 1 - 1 / 2000, (4 - 1 / 1000) / 4))


def test_exponent_window_empty():
    # beta_minus = 0.375 exceeds beta_plus = 0.25
    with pytest.raises(EmptyWindowError):
        exponent_window(3.0, 2.0, 2)


def test_exponent_window_is_cached():
    assert exponent_window(1.0, 2.0, 2) is exponent_window(1.0, 2.0, 2)


def test_beta_sigma_conversions():
    assert beta_from_sigma(2.0) == pytest.approx(2 / 3)
    assert sigma_from_beta(2 / 3) == pytest.approx(2.0)
    assert math.isinf(sigma_from_beta(1.0))


def test_default_sigma_is_window_midpoint():
    assert default_sigma(exponent_window(1.0, 2.0, 2)) == pytest.approx(2.0)


def test_regularization_floor():
    p = ModelParams(alpha=1.0, theta=0.25, eps=1e-4, c0_floor=1.0)
    assert regularization_floor(p) == pytest.approx(1e-4 ** (2 / 3))
    assert regularization_floor(ModelParams()) == 0.0


@pytest.mark.parametrize("alpha, gamma, expected", [
    (1.0, 2.0, NuWindow(lower=0.0, upper=3.0)),
    (0.8, 1.5, NuWindow(lower=0.0, upper=2.2)),
    (1.2, 2.0, NuWindow(lower=4 / 3, upper=math.inf, lower_closed=True)),
])
def test_nu_window(alpha, gamma, expected):
    window = nu_window(alpha, gamma)
    assert window.lower == pytest.approx(expected.lower)
    assert window.upper == pytest.approx(expected.upper)
    assert (window.lower_closed, window.upper_closed) == (expected.lower_closed, expected.upper_closed)


def test_nu_window_between_the_pressure_regimes():
    window = nu_window(1.2, 1.05)
    assert window.lower == pytest.approx(2 / 3)
    assert window.upper == pytest.approx(18.0)
    assert window.contains(2 / 3 + 1e-12) and window.contains(17.9)
    assert not window.contains(0.5)


def test_nu_window_absent_for_large_alpha():
    assert nu_window(1.6, 2.0) is None


def test_dirichlet_trace_is_reported_not_rejected():
    assert validate_params(ModelParams(alpha=1.0, gamma=2.0, nu=1.0)).dirichlet_trace
    check = validate_params(ModelParams(alpha=1.0, gamma=2.0, nu=3.5))
    assert check.ok
    assert not check.dirichlet_trace
    assert not validate_params(ModelParams(alpha=1.2, gamma=2.0, nu=1.0)).dirichlet_trace
