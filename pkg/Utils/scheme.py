# Utils/scheme.py
# ============================================================================
# Staggered Lagrangian semi-discretization
# ============================================================================
#
#   d rho_i / dt = -rho_i^2 (u_{i+1} - u_i) / h
#   d u_j / dt   = (F_j - F_{j-1}) / h,   F_i = -p(rho_i) + K(rho_i) (u_{i+1} - u_i) / h
#
# with K(rho) = a2 rho^(1+alpha) + eps rho^(1+theta). Cell i sits between
# nodes i and i+1; ghost cells/nodes close the stencil per boundary tag.

import logging
from dataclasses import dataclass

import numpy as np

from Core.errors import NegativeDensityError, PreconditionError
from Core.params import ModelParams, pressure, viscous_coefficient
from Core.state import StaggeredState

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StateDerivative:
    drho: np.ndarray
    du: np.ndarray
    dorigin: float = 0.0


@dataclass(frozen=True, eq=False)
class GhostView:
    """Ghost-extended arrays.

    rho_ext[i + 1] is cell i for i in [-1, N]; u_ext[j + 1] is node j for j in [-1, N + 1].
    """
    rho_ext: np.ndarray
    u_ext: np.ndarray
    n_cells: int


# ============================================================================
# BOUNDARY CLOSURE
# ============================================================================

def apply_bc(s: StaggeredState) -> GhostView:
    """Resolve ghost cells and nodes for the rhs stencil"""
    n = s.n_cells
    rho_ext = np.empty(n + 2)
    rho_ext[1:n + 1] = s.rho
    u_ext = np.zeros(n + 3)

    if s.bc.is_periodic:
        rho_ext[0] = s.rho[-1]
        rho_ext[n + 1] = s.rho[0]
        u_ext[1:n + 1] = s.u
        u_ext[0] = s.u[-1]
        u_ext[n + 1] = s.u[0]
        u_ext[n + 2] = s.u[1 % n]
        return GhostView(rho_ext=rho_ext, u_ext=u_ext, n_cells=n)

    # Walls mirror the density; free ends see vacuum so p = K = 0 there
    rho_ext[0] = 0.0 if s.bc.free_left else s.rho[0]
    rho_ext[n + 1] = 0.0 if s.bc.free_right else s.rho[-1]
    u_ext[1:n + 2] = s.u
    # u_ext[0] and u_ext[n + 2] stay 0
    return GhostView(rho_ext=rho_ext, u_ext=u_ext, n_cells=n)


def _check_density(s: StaggeredState):
    active = s.rho[s.active_mask]
    if active.size and active.min() <= 0:
        bad = int(np.flatnonzero(s.active_mask)[np.argmin(active)])
        raise NegativeDensityError(
            f"non-positive density {s.rho[bad]:.3e} in cell {bad} at t={s.t:.6g}",
            context={'cell': bad, 'rho': float(s.rho[bad]), 't': s.t}
        )


def cell_jumps(s: StaggeredState) -> np.ndarray:
    """u_{i+1} - u_i for every real cell"""
    if s.bc.is_periodic:
        return np.roll(s.u, -1) - s.u
    return np.diff(s.u)


def cell_fluxes(g: GhostView, h: float, p: ModelParams) -> np.ndarray:
    """F_i = -p(rho_i) + K(rho_i) (u_{i+1} - u_i)/h for cells -1..N (index i + 1)"""
    jump = g.u_ext[1:] - g.u_ext[:-1]
    return -pressure(g.rho_ext, p) + viscous_coefficient(g.rho_ext, p) * jump / h


# ============================================================================
# RIGHT-HAND SIDE
# ============================================================================

def rhs(s: StaggeredState, p: ModelParams) -> StateDerivative:
    _check_density(s)
    n = s.n_cells
    h = s.h
    g = apply_bc(s)

    drho = -s.rho ** 2 * cell_jumps(s) / h

    flux = cell_fluxes(g, h, p)
    du = (flux[1:] - flux[:-1]) / h
    if s.bc.is_periodic:
        du = du[:n]
    else:
        if s.bc.wall_left:
            du[0] = 0.0
        if s.bc.wall_right:
            du[n] = 0.0

    if s.pinned_cell is not None:
        drho[s.pinned_cell] = 0.0

    return StateDerivative(drho=drho, du=du, dorigin=float(s.u[0]))


def check_pinning_compatible(s: StaggeredState, p: ModelParams):
    """Pinned vacuum with gamma = 1 makes the Lagrangian energy diverge"""
    if s.pinned_cell is not None and p.gamma == 1:
        raise PreconditionError("pinned vacuum requires gamma > 1",
                                context={'gamma': p.gamma, 'pinned_cell': s.pinned_cell})


# ============================================================================
# POINT-VACUUM MOMENTUM IDENTITY
# ============================================================================

def momentum_identity_residual(s: StaggeredState, d: StateDerivative, p: ModelParams) -> np.ndarray:
    """Per-cell residual of the flux identity on either side of the pinned cell.

    Right of the vacuum (i > k):
        a2 rho_i^(1+alpha) du_i/h = sum_{j=k+1..i} u_j' h + a1 rho_i^gamma
    Left of the vacuum (i < k):
        a2 rho_i^(1+alpha) du_i/h = -sum_{j=i+1..k} u_j' h + a1 rho_i^gamma
    """
    if s.pinned_cell is None:
        raise PreconditionError("momentum identity needs a pinned vacuum cell")
    if p.eps != 0:
        raise PreconditionError("momentum identity holds for the unregularized scheme only",
                                context={'eps': p.eps})

    k = s.pinned_cell
    n = s.n_cells
    h = s.h
    lhs = p.a2 * s.rho ** (1 + p.alpha) * cell_jumps(s) / h
    pres = p.a1 * s.rho ** p.gamma

    residual = np.zeros(n)

    right_sums = np.cumsum(d.du[k + 1:n] * h)
    residual[k + 1:] = lhs[k + 1:] - (right_sums + pres[k + 1:])

    left_sums = np.cumsum((d.du[1:k + 1] * h)[::-1])[::-1]
    residual[:k] = lhs[:k] - (-left_sums + pres[:k])

    return residual
