# Core/params.py
# ============================================================================
# Model parameters, constitutive laws and admissible exponent windows
# ============================================================================

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from cachetools import LRUCache, cached
from scipy.special import xlogy

from .errors import DomainError, EmptyWindowError, ParameterError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# ============================================================================
# PARAMETER RECORDS
# ============================================================================

@dataclass(frozen=True)
class ModelParams:
    """Physical and regularization coefficients.

    p(rho) = a1 rho^gamma, mu_eps(rho) = a2 rho^alpha + eps rho^theta.
    """
    alpha: float = 1.0
    gamma: float = 2.0
    a1: float = 1.0
    a2: float = 1.0
    eps: float = 0.0
    theta: float = 0.25
    n_reg: int = 2
    nu: float = 1.0
    c0_floor: float = 1.0


@dataclass(frozen=True)
class ParamCheck:
    """Outcome of validate_params: admissible, plus flags that are reported but never rejected"""
    ok: bool
    short_time: bool
    dirichlet_trace: bool = False


@dataclass(frozen=True)
class ExponentWindow:
    beta_minus: float
    beta_plus: float
    sigma_minus: float
    sigma_plus: float

    def contains_sigma(self, sigma: float) -> bool:
        return sigma > 0 and self.contains_beta(beta_from_sigma(sigma))

    def contains_beta(self, beta: float) -> bool:
        return self.beta_minus < beta < self.beta_plus


@dataclass(frozen=True)
class NuWindow:
    """Moment exponents for which the Dirichlet trace of rho u holds; closed ends are inclusive"""
    lower: float
    upper: float
    lower_closed: bool = False
    upper_closed: bool = False

    def contains(self, nu: float) -> bool:
        above = nu >= self.lower if self.lower_closed else nu > self.lower
        below = nu <= self.upper if self.upper_closed else nu < self.upper
        return nu > 0 and above and below


# ============================================================================
# VALIDATION
# ============================================================================

def validate_params(p: ModelParams) -> ParamCheck:
    """Check every ModelParams inequality, raising on the first one violated.

    The short-time flag gamma > max{1, alpha} is reported but never rejected.
    """
    checks = [
        (p.alpha > 0.5, "alpha > 1/2", "alpha must exceed 1/2"),
        (p.gamma > p.alpha / 2, "gamma > alpha/2", "gamma > alpha/2 violated"),
        (p.gamma >= 1, "gamma >= 1", "gamma must be at least 1"),
        (p.a1 > 0, "a1 > 0", "pressure coefficient a1 must be positive"),
        (p.a2 > 0, "a2 > 0", "viscosity coefficient a2 must be positive"),
        (p.eps >= 0, "eps >= 0", "regularization strength eps must be non-negative"),
        (p.eps == 0 or 0 < p.theta < 0.5, "0 < theta < 1/2", "theta must lie in (0, 1/2) when eps > 0"),
        (int(p.n_reg) == p.n_reg and p.n_reg >= 2, "n_reg >= 2", "regularity integer n_reg must be an integer >= 2"),
        (p.nu > 0, "nu > 0", "moment exponent nu must be positive"),
        (p.c0_floor > 0, "c0_floor > 0", "floor coefficient c0_floor must be positive"),
    ]
    for holds, constraint, message in checks:
        if not holds:
            raise ParameterError(message, context={'constraint': constraint, 'params': p})

    short_time = p.gamma > max(1.0, p.alpha)
    if not short_time:
        logger.debug(f"Short-time condition gamma > max(1, alpha) fails for {p}")

    window = nu_window(p.alpha, p.gamma)
    dirichlet_trace = window is not None and window.contains(p.nu)
    if not dirichlet_trace:
        logger.debug(f"nu={p.nu} outside the Dirichlet trace window {window} for {p}")
    return ParamCheck(ok=True, short_time=short_time, dirichlet_trace=dirichlet_trace)


def nu_window(alpha: float, gamma: float) -> Optional[NuWindow]:
    """Moment exponents nu giving the Dirichlet trace of rho u; None outside 1/2 < alpha < 3/2, gamma >= 1"""
    if not 0.5 < alpha < 1.5 or gamma < 1:
        return None
    if alpha <= 1:
        return NuWindow(lower=0.0, upper=2 * gamma - alpha)
    if gamma < (1 + alpha) / 2:
        return NuWindow(lower=2 * (alpha + gamma - 2) / (3 - alpha - gamma),
                        upper=2 * (2 * gamma - alpha) / (1 + alpha - 2 * gamma),
                        lower_closed=True, upper_closed=True)
    return NuWindow(lower=4 * (alpha - 1) / (3 - 2 * alpha), upper=math.inf, lower_closed=True)


# ============================================================================
# CONSTITUTIVE FUNCTIONS
# ============================================================================

def pi_fn(rho: ArrayLike, gamma: float) -> ArrayLike:
    """pi(rho) = rho log rho for gamma = 1, rho^gamma/(gamma-1) otherwise; pi(0) = 0"""
    rho = np.asarray(rho, dtype=float)
    if gamma == 1:
        out = xlogy(rho, rho)
    else:
        out = rho ** gamma / (gamma - 1)
    return out if out.ndim else float(out)


def specific_entropy(rho: ArrayLike, gamma: float) -> ArrayLike:
    """pi(rho)/rho. Diverges at rho = 0 when gamma = 1."""
    rho = np.asarray(rho, dtype=float)
    if gamma == 1:
        if np.any(rho <= 0):
            raise DomainError("specific entropy log(rho) undefined at rho = 0 for gamma = 1",
                              context={'gamma': gamma})
        out = np.log(rho)
    else:
        out = rho ** (gamma - 1) / (gamma - 1)
    return out if out.ndim else float(out)


def pressure(rho: ArrayLike, p: ModelParams) -> ArrayLike:
    rho = np.asarray(rho, dtype=float)
    out = p.a1 * rho ** p.gamma
    return out if out.ndim else float(out)


def mu_eps(rho: ArrayLike, p: ModelParams) -> ArrayLike:
    rho = np.asarray(rho, dtype=float)
    out = p.a2 * rho ** p.alpha + p.eps * rho ** p.theta
    return out if out.ndim else float(out)


def viscous_coefficient(rho: ArrayLike, p: ModelParams) -> ArrayLike:
    """K(rho) = rho mu_eps(rho), the Lagrangian diffusion coefficient"""
    rho = np.asarray(rho, dtype=float)
    out = p.a2 * rho ** (1 + p.alpha) + p.eps * rho ** (1 + p.theta)
    return out if out.ndim else float(out)


def sound_speed(rho: ArrayLike, p: ModelParams) -> ArrayLike:
    rho = np.asarray(rho, dtype=float)
    out = np.sqrt(p.a1 * p.gamma * rho ** (p.gamma - 1))
    return out if out.ndim else float(out)


def internal_energy(rho: ArrayLike, p: ModelParams) -> ArrayLike:
    """a1 * specific_entropy, the per-mass energy whose rate balances the pressure work"""
    return p.a1 * specific_entropy(rho, p.gamma)


def regularization_floor(p: ModelParams) -> float:
    """c0 * eps^(1/(2 alpha - 2 theta))"""
    if p.eps <= 0:
        return 0.0
    return p.c0_floor * p.eps ** (1.0 / (2 * p.alpha - 2 * p.theta))


# ============================================================================
# EXPONENT WINDOWS
# ============================================================================

def beta_from_sigma(sigma: float) -> float:
    return sigma / (1.0 + sigma)


def sigma_from_beta(beta: float) -> float:
    if beta >= 1.0:
        return math.inf
    return beta / (1.0 - beta)


@cached(cache=LRUCache(maxsize=256))
def exponent_window(alpha: float, gamma: float, n: int) -> ExponentWindow:
    """Admissible Lagrangian (beta) and Eulerian (sigma) vacuum-profile exponents"""
    if n < 2:
        raise ParameterError("regularity integer n must be >= 2", context={'constraint': 'n >= 2', 'n': n})

    beta_minus = max(1.0 / (2 * alpha), (1.0 / gamma) * (1 - 1.0 / (2 * n)))
    beta_plus = min(1.0,
                    (1.0 / alpha) * (1 - 1.0 / (2 * n)),
                    (1.0 / (1 + 3 * alpha)) * (4 - 1.0 / n))

    if beta_minus >= beta_plus:
        raise EmptyWindowError(
            f"Empty exponent window: beta_minus={beta_minus:.6g} >= beta_plus={beta_plus:.6g}",
            context={'alpha': alpha, 'gamma': gamma, 'n': n}
        )

    return ExponentWindow(
        beta_minus=beta_minus,
        beta_plus=beta_plus,
        sigma_minus=sigma_from_beta(beta_minus),
        sigma_plus=sigma_from_beta(beta_plus),
    )


def default_sigma(window: ExponentWindow) -> float:
    """Midpoint of the sigma window; the beta-window midpoint when sigma_plus is unbounded"""
    if math.isinf(window.sigma_plus):
        return sigma_from_beta(0.5 * (window.beta_minus + window.beta_plus))
    return 0.5 * (window.sigma_minus + window.sigma_plus)
