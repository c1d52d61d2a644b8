# Utils/coords.py
# ============================================================================
# Eulerian <-> Lagrangian transforms and particle paths
# ============================================================================

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from Core.errors import DomainError, NegativeDensityError
from Core.state import BoundaryCondition, EulerianField, StaggeredState

if TYPE_CHECKING:
    from .integrator import RunOutput

logger = logging.getLogger(__name__)

DOMAIN_DEFECT_TOLERANCE = 1e-6
MAX_PINNED_BETA = 0.99
FALLBACK_PINNED_BETA = 0.5


@dataclass(frozen=True, eq=False)
class ParticleTrajectory:
    times: np.ndarray
    positions: np.ndarray
    mass_label: float


# ============================================================================
# EULERIAN -> LAGRANGIAN
# ============================================================================

def _invert_cumulative(x: np.ndarray, cumulative: np.ndarray, rho: np.ndarray,
                       targets: np.ndarray) -> np.ndarray:
    """Exact inverse of the piecewise-linear cumulative mass"""
    idx = np.searchsorted(cumulative, targets, side='right') - 1
    idx = np.clip(idx, 0, rho.size - 1)
    cell_rho = rho[idx]
    offset = np.divide(targets - cumulative[idx], cell_rho,
                       out=np.zeros_like(targets, dtype=float), where=cell_rho > 0)
    return x[idx] + offset


def eulerian_to_lagrangian(f: EulerianField, n_cells: Optional[int] = None,
                           bc: Optional[BoundaryCondition] = None) -> StaggeredState:
    """Resample onto equal-mass cells at the quantiles of the cumulative mass"""
    n = int(n_cells or f.rho.size)
    bc = BoundaryCondition.parse(bc) if bc is not None else f.bc
    if np.any(f.rho < 0):
        raise NegativeDensityError("Eulerian density must be non-negative")

    cumulative = f.cumulative_mass()
    total = float(cumulative[-1])
    if total <= 0:
        raise DomainError("zero total mass", context={'mass': total})

    h = total / n
    labels = h * np.arange(n + 1)
    nodes = _invert_cumulative(f.x, cumulative, f.rho, labels)
    nodes[0] = f.x[0]
    nodes[-1] = f.x[-1]

    rho = h / np.diff(nodes)
    u = np.interp(nodes, f.x, f.u)
    if bc.is_periodic:
        u = u[:-1]
    else:
        if bc.wall_left:
            u[0] = 0.0
        if bc.wall_right:
            u[-1] = 0.0

    return StaggeredState(h=h, t=f.t, rho=rho, u=u, bc=bc, origin=float(f.x[0]))


# ============================================================================
# LAGRANGIAN -> EULERIAN
# ============================================================================

def _half_width(near: float, far: Optional[float], h: float, side: str) -> float:
    """Integral of 1/rho over half the pinned cell under rho = a |y - y0|^beta"""
    if far is not None and near > 0 and far > 0:
        beta = math.log(far / near) / math.log(2.0)
    else:
        beta = FALLBACK_PINNED_BETA
        logger.warning(f"Pinned cell {side} side lacks two neighbours; using beta={beta}")

    if not 0.0 <= beta <= MAX_PINNED_BETA:
        clipped = min(max(beta, 0.0), MAX_PINNED_BETA)
        logger.warning(f"Pinned cell {side} fit beta={beta:.4f} outside [0, {MAX_PINNED_BETA}], clipped to {clipped}")
        beta = clipped

    a = near / h ** beta
    return (0.5 * h) ** (1.0 - beta) / (a * (1.0 - beta))


def pinned_cell_width(s: StaggeredState) -> float:
    k = s.pinned_cell
    n = s.n_cells

    def neighbour(i: int) -> Optional[float]:
        if s.bc.is_periodic:
            return float(s.rho[i % n])
        return float(s.rho[i]) if 0 <= i < n else None

    widths = 0.0
    for side, step in (('left', -1), ('right', 1)):
        near = neighbour(k + step)
        far = neighbour(k + 2 * step)
        if near is None:
            # pinned cell touches the boundary: reuse the other side
            near, far = neighbour(k - step), neighbour(k - 2 * step)
        widths += _half_width(near, far, s.h, side)
    return widths


def cell_widths(s: StaggeredState) -> np.ndarray:
    active = s.active_mask
    if np.any(s.rho[active] <= 0):
        raise NegativeDensityError("cannot reconstruct widths from non-positive density",
                                   context={'t': s.t})
    widths = np.empty(s.n_cells)
    widths[active] = s.h / s.rho[active]
    if s.pinned_cell is not None:
        widths[s.pinned_cell] = pinned_cell_width(s)
    return widths


def lagrangian_to_eulerian(s: StaggeredState) -> EulerianField:
    widths = cell_widths(s)
    x = s.origin + np.concatenate(([0.0], np.cumsum(widths)))
    u = np.append(s.u, s.u[0]) if s.bc.is_periodic else s.u.copy()

    defect = 0.0
    if s.bc is BoundaryCondition.DIRICHLET:
        defect = float(abs(x[-1] - 1.0))
        if defect > DOMAIN_DEFECT_TOLERANCE:
            logger.warning(f"Domain endpoint defect |x_N - 1| = {defect:.3e} at t={s.t:.6g}")

    return EulerianField(x=x, rho=s.rho.copy(), u=u, t=s.t, bc=s.bc, domain_defect=defect)


# ============================================================================
# PARTICLE PATHS
# ============================================================================

def mass_labels(s: StaggeredState) -> np.ndarray:
    return s.h * np.arange(s.n_cells + 1)


def particle_path(out: "RunOutput", x0: float) -> ParticleTrajectory:
    """Follow the fluid particle starting at x0 through the run's snapshots.

    The particle keeps its mass label, so its position in each snapshot is
    read off the reconstructed node positions.
    """
    if not out.snapshots:
        raise DomainError("run output carries no snapshots")

    first = out.snapshots[0]
    field0 = lagrangian_to_eulerian(first)
    if not field0.x[0] <= x0 <= field0.x[-1]:
        raise DomainError(f"particle start {x0} outside domain [{field0.x[0]}, {field0.x[-1]}]",
                          context={'x0': x0})

    label = float(np.interp(x0, field0.x, mass_labels(first)))
    length = field0.length

    times, positions = [], []
    for snap in out.snapshots:
        f = lagrangian_to_eulerian(snap)
        position = float(np.interp(label, mass_labels(snap), f.x))
        if snap.bc.is_periodic:
            position = field0.x[0] + (position - field0.x[0]) % length
        times.append(snap.t)
        positions.append(position)

    return ParticleTrajectory(times=np.asarray(times), positions=np.asarray(positions), mass_label=label)
