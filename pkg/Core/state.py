# Core/state.py
# ============================================================================
# State containers: staggered Lagrangian grid and Eulerian fields
# ============================================================================

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .errors import NegativeDensityError, PreconditionError

logger = logging.getLogger(__name__)


class BoundaryCondition(Enum):
    """Boundary-condition tags (values are the config/CLI spelling)"""
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"
    FREE_LEFT = "free-left"
    FREE_RIGHT = "free-right"
    FREE_BOTH = "free-both"

    @property
    def is_periodic(self) -> bool:
        return self is BoundaryCondition.PERIODIC

    @property
    def free_left(self) -> bool:
        return self in (BoundaryCondition.FREE_LEFT, BoundaryCondition.FREE_BOTH)

    @property
    def free_right(self) -> bool:
        return self in (BoundaryCondition.FREE_RIGHT, BoundaryCondition.FREE_BOTH)

    @property
    def wall_left(self) -> bool:
        return self in (BoundaryCondition.DIRICHLET, BoundaryCondition.FREE_RIGHT)

    @property
    def wall_right(self) -> bool:
        return self in (BoundaryCondition.DIRICHLET, BoundaryCondition.FREE_LEFT)

    @classmethod
    def parse(cls, tag) -> "BoundaryCondition":
        if isinstance(tag, cls):
            return tag
        return cls(str(tag).strip().lower().replace('_', '-'))


# ============================================================================
# LAGRANGIAN STATE
# ============================================================================

@dataclass(frozen=True, eq=False)
class StaggeredState:
    """Density on cells, velocity on nodes.

    Cell i lies between nodes i and i+1. Periodic states store N nodes,
    node N being node 0 again. `origin` is the Eulerian position of node 0.
    """
    h: float
    t: float
    rho: np.ndarray
    u: np.ndarray
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    pinned_cell: Optional[int] = None
    origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'rho', np.asarray(self.rho, dtype=float))
        object.__setattr__(self, 'u', np.asarray(self.u, dtype=float))
        object.__setattr__(self, 'bc', BoundaryCondition.parse(self.bc))

    @property
    def n_cells(self) -> int:
        return int(self.rho.size)

    @property
    def n_nodes(self) -> int:
        return int(self.u.size)

    @property
    def active_mask(self) -> np.ndarray:
        """True on every cell that is not the pinned vacuum cell"""
        mask = np.ones(self.n_cells, dtype=bool)
        if self.pinned_cell is not None:
            mask[self.pinned_cell] = False
        return mask

    def validate(self) -> "StaggeredState":
        n = self.n_cells
        expected_nodes = n if self.bc.is_periodic else n + 1
        if self.u.size != expected_nodes:
            raise PreconditionError(
                f"velocity layout mismatch: {self.u.size} nodes for {n} cells ({self.bc.value})",
                context={'cells': n, 'nodes': self.u.size, 'bc': self.bc.value}
            )
        if self.pinned_cell is not None:
            if n % 2 == 0 or not 0 <= self.pinned_cell < n:
                raise PreconditionError(
                    "pinned cell requires odd N and an in-range index",
                    context={'cells': n, 'pinned_cell': self.pinned_cell}
                )
            if self.rho[self.pinned_cell] != 0.0:
                raise PreconditionError("pinned cell density must be exactly 0",
                                        context={'pinned_cell': self.pinned_cell})
        active = self.rho[self.active_mask]
        if active.size and not np.all(active > 0):
            bad = int(np.flatnonzero(self.active_mask)[np.argmin(active)])
            raise NegativeDensityError(
                f"non-positive density in cell {bad}",
                context={'cell': bad, 'rho': float(self.rho[bad]), 't': self.t}
            )
        if self.bc.wall_left and self.u[0] != 0.0:
            raise PreconditionError("wall boundary requires u[0] = 0", context={'u0': float(self.u[0])})
        if self.bc.wall_right and self.u[-1] != 0.0:
            raise PreconditionError("wall boundary requires u[N] = 0", context={'uN': float(self.u[-1])})
        return self

    def with_fields(self, **changes) -> "StaggeredState":
        return replace(self, **changes)

    def copy(self) -> "StaggeredState":
        return replace(self, rho=self.rho.copy(), u=self.u.copy())


# ============================================================================
# EULERIAN FIELD
# ============================================================================

@dataclass(frozen=True, eq=False)
class EulerianField:
    """Cell densities between strictly increasing nodes, velocities on nodes.

    `scale` is the multiplicative mass normalization applied by a constructor.
    """
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    t: float = 0.0
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    vacuum_at: Optional[float] = None
    domain_defect: float = 0.0
    flags: Tuple[str, ...] = field(default_factory=tuple)
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'x', np.asarray(self.x, dtype=float))
        object.__setattr__(self, 'rho', np.asarray(self.rho, dtype=float))
        object.__setattr__(self, 'u', np.asarray(self.u, dtype=float))
        object.__setattr__(self, 'bc', BoundaryCondition.parse(self.bc))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.x[:-1] + self.x[1:])

    @property
    def mass(self) -> float:
        return float(np.sum(self.rho * self.widths))

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    def cumulative_mass(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.rho * self.widths)))

    def with_flag(self, flag: str) -> "EulerianField":
        if flag in self.flags:
            return self
        return replace(self, flags=self.flags + (flag,))

    def with_fields(self, **changes) -> "EulerianField":
        return replace(self, **changes)
