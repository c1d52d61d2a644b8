# Utils/scenarios.py
# ============================================================================
# Initial data: vacuum profiles, smooth states, regularization, projection
# ============================================================================

import csv
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from Core.errors import ParameterError, PinningError, PreconditionError
from Core.params import (ModelParams, default_sigma, exponent_window, regularization_floor,
                         validate_params)
from Core.state import BoundaryCondition, EulerianField, StaggeredState

from .coords import eulerian_to_lagrangian
from .integrator import IntegratorConfig

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 4096
UNVERIFIED_FLAG = "compatibility-unverified"


class ScenarioKind(Enum):
    POINT_VACUUM = "point_vacuum"
    PIECE_VACUUM = "piece_vacuum"
    SMOOTH_PERIODIC = "smooth_periodic"
    SMOOTH_DIRICHLET = "smooth_dirichlet"
    CUSTOM = "custom"


class VelocityInit(Enum):
    ZERO = "zero"
    SINUSOIDAL = "sinusoidal"


@dataclass(frozen=True)
class ScenarioSpec:
    """Initial-data recipe.

    sigma=None picks the midpoint of the admissible window for vacuum kinds.
    `resolution` is the Eulerian sampling grid before projection onto N cells.
    `profile` is the x, rho[, u] table a custom scenario interpolates.
    """
    kind: ScenarioKind = ScenarioKind.SMOOTH_PERIODIC
    sigma: Optional[float] = None
    A0: float = 1.0
    A1: float = 1.0
    B0: float = 1.0
    B1: float = 1.0
    x0: float = 0.5
    x1: float = 0.6
    u0_spec: VelocityInit = VelocityInit.ZERO
    u0_amplitude: float = 0.0
    u0_frequency: float = 1.0
    N: int = 101
    bc: BoundaryCondition = BoundaryCondition.PERIODIC
    pinned: bool = False
    resolution: int = DEFAULT_RESOLUTION
    profile: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ScenarioKind(self.kind))
        object.__setattr__(self, 'u0_spec', VelocityInit(self.u0_spec))
        object.__setattr__(self, 'bc', BoundaryCondition.parse(self.bc))


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    description: str
    scenario: ScenarioSpec
    params: ModelParams
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)


# ============================================================================
# HELPERS
# ============================================================================

def _grid(spec: ScenarioSpec):
    x = np.linspace(0.0, 1.0, spec.resolution + 1)
    return x, 0.5 * (x[:-1] + x[1:])


def _velocity(spec: ScenarioSpec, x: np.ndarray) -> np.ndarray:
    match spec.u0_spec:
        case VelocityInit.ZERO:
            u = np.zeros_like(x)
        case VelocityInit.SINUSOIDAL:
            u = spec.u0_amplitude * np.sin(2 * np.pi * spec.u0_frequency * x)
    if spec.bc.wall_left:
        u[0] = 0.0
    if spec.bc.wall_right:
        u[-1] = 0.0
    return u


def _normalize(x: np.ndarray, rho: np.ndarray, u: np.ndarray, bc: BoundaryCondition,
               vacuum_at: Optional[float] = None, flags=()) -> EulerianField:
    mass = float(np.sum(rho * np.diff(x)))
    if mass <= 0:
        raise ParameterError("initial density has zero mass")
    scale = 1.0 / mass
    return EulerianField(x=x, rho=rho * scale, u=u, bc=bc, vacuum_at=vacuum_at,
                         flags=tuple(flags), scale=scale)


def _resolve_sigma(spec: ScenarioSpec, p: ModelParams) -> float:
    window = exponent_window(p.alpha, p.gamma, p.n_reg)
    sigma = default_sigma(window) if spec.sigma is None else spec.sigma
    if not window.contains_sigma(sigma):
        raise ParameterError(
            f"sigma={sigma} outside the admissible window ({window.sigma_minus:.6g}, {window.sigma_plus:.6g})",
            context={'constraint': 'sigma_minus < sigma < sigma_plus', 'sigma': sigma,
                     'sigma_minus': window.sigma_minus, 'sigma_plus': window.sigma_plus}
        )
    return sigma


def _vacuum_flags(spec: ScenarioSpec):
    if spec.u0_spec is not VelocityInit.ZERO and spec.u0_amplitude != 0:
        logger.warning(f"Nonzero initial velocity next to vacuum ({spec.kind.value}): {UNVERIFIED_FLAG}")
        return (UNVERIFIED_FLAG,)
    return ()


def check_momentum_on_vacuum(f: EulerianField):
    """Reject data carrying velocity on both faces of a vacuum cell"""
    vacuum = np.flatnonzero(f.rho == 0)
    if vacuum.size == 0:
        return
    moving = (f.u[vacuum] != 0) & (f.u[vacuum + 1] != 0)
    if np.any(moving):
        cell = int(vacuum[np.argmax(moving)])
        raise PreconditionError("initial momentum on vacuum is not admissible",
                                context={'cell': cell, 'x': float(f.x[cell])})


def momentum_moment(f: EulerianField, nu: float) -> float:
    """int |m0|^(2 + nu) / rho0^(1 + nu) dx with m0 = rho0 u0, u0 averaged onto cells.

    Vacuum cells contribute 0 once check_momentum_on_vacuum has passed.
    """
    u_cell = 0.5 * (f.u[:-1] + f.u[1:])
    moment = float(np.sum(f.rho * np.abs(u_cell) ** (2.0 + nu) * f.widths))
    if not np.isfinite(moment):
        raise PreconditionError(f"initial momentum moment is not finite for nu={nu}",
                                context={'nu': nu, 'moment': moment})
    return moment


# ============================================================================
# CONSTRUCTORS
# ============================================================================

def ic_point_vacuum(spec: ScenarioSpec, p: Optional[ModelParams] = None) -> EulerianField:
    """rho0 = (A0 + A1)/2 |x - x0|^sigma sampled at midpoints, normalized to unit mass"""
    p = p or ModelParams()
    sigma = _resolve_sigma(spec, p)
    if not 0 < spec.x0 < 1:
        raise ParameterError("vacuum point x0 must lie in (0, 1)", context={'constraint': '0 < x0 < 1', 'x0': spec.x0})
    if not 0 < spec.A0 <= spec.A1:
        raise ParameterError("envelope constants need 0 < A0 <= A1", context={'constraint': '0 < A0 <= A1'})

    x, mid = _grid(spec)
    rho = 0.5 * (spec.A0 + spec.A1) * np.abs(mid - spec.x0) ** sigma
    u = _velocity(spec, x)
    return _normalize(x, rho, u, spec.bc, vacuum_at=spec.x0, flags=_vacuum_flags(spec))


def ic_piece_vacuum(spec: ScenarioSpec, p: Optional[ModelParams] = None) -> EulerianField:
    """Power-law flanks around the vacuum block [x0, x1]"""
    p = p or ModelParams()
    sigma = _resolve_sigma(spec, p)
    if not 0 < spec.x0 < spec.x1 < 1:
        raise ParameterError("piece vacuum needs 0 < x0 < x1 < 1",
                             context={'constraint': '0 < x0 < x1 < 1', 'x0': spec.x0, 'x1': spec.x1})

    x, mid = _grid(spec)
    left = 0.5 * (spec.A0 + spec.A1) * np.clip(spec.x0 - mid, 0.0, None) ** sigma
    right = 0.5 * (spec.B0 + spec.B1) * np.clip(mid - spec.x1, 0.0, None) ** sigma
    rho = np.where(mid < spec.x0, left, np.where(mid > spec.x1, right, 0.0))

    u = _velocity(spec, x)
    u[(x > spec.x0) & (x < spec.x1)] = 0.0
    f = _normalize(x, rho, u, spec.bc, vacuum_at=0.5 * (spec.x0 + spec.x1), flags=_vacuum_flags(spec))
    check_momentum_on_vacuum(f)
    return f


def ic_smooth_periodic(spec: ScenarioSpec) -> EulerianField:
    x, mid = _grid(spec)
    rho = 1.0 + 0.5 * np.sin(2 * np.pi * mid)
    u = _velocity(replace(spec, bc=BoundaryCondition.PERIODIC), x)
    return _normalize(x, rho, u, BoundaryCondition.PERIODIC)


def ic_smooth_dirichlet(spec: ScenarioSpec) -> EulerianField:
    x, mid = _grid(spec)
    rho = 1.0 + 0.5 * np.cos(np.pi * mid)
    u = _velocity(replace(spec, bc=BoundaryCondition.DIRICHLET), x)
    return _normalize(x, rho, u, BoundaryCondition.DIRICHLET)


def ic_custom(spec: ScenarioSpec, rho_fn: Callable[[np.ndarray], np.ndarray],
              u_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> EulerianField:
    x, mid = _grid(spec)
    rho = np.asarray(rho_fn(mid), dtype=float)
    if np.any(rho < 0):
        raise ParameterError("custom density must be non-negative")
    u = np.array(u_fn(x), dtype=float) if u_fn is not None else np.zeros_like(x)
    if spec.bc.wall_left:
        u[0] = 0.0
    if spec.bc.wall_right:
        u[-1] = 0.0
    zeros = np.flatnonzero(rho == 0)
    f = _normalize(x, rho, u, spec.bc, vacuum_at=float(mid[zeros[0]]) if zeros.size else None)
    check_momentum_on_vacuum(f)
    return f


# ============================================================================
# TABULATED PROFILES
# ============================================================================

def load_profile(path: str) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Read an x, rho[, u] CSV with x increasing over [0, 1]"""
    try:
        with open(path, newline='') as handle:
            rows = list(csv.DictReader(handle))
    except OSError as e:
        raise PreconditionError(f"cannot read profile {path}", context={'path': str(path)}, cause=e) from e

    if not rows or 'x' not in rows[0] or 'rho' not in rows[0]:
        raise PreconditionError(f"profile {path} needs x and rho columns", context={'path': str(path)})
    try:
        x = np.array([float(row['x']) for row in rows])
        rho = np.array([float(row['rho']) for row in rows])
        u = np.array([float(row['u']) for row in rows]) if 'u' in rows[0] else None
    except (TypeError, ValueError) as e:
        raise PreconditionError(f"profile {path} has a non-numeric entry", context={'path': str(path)}, cause=e) from e

    if x.size < 2 or np.any(np.diff(x) <= 0) or x[0] > 0 or x[-1] < 1:
        raise PreconditionError(f"profile {path} must cover [0, 1] with increasing x",
                                context={'path': str(path), 'x_range': (float(x[0]), float(x[-1]))})
    logger.debug(f"Loaded profile {path}: {x.size} rows")
    return x, rho, u


def ic_profile(spec: ScenarioSpec) -> EulerianField:
    """Custom scenario from the tabulated profile named by spec.profile"""
    if spec.profile is None:
        raise PreconditionError("custom scenario needs a profile table", context={'key': 'scenario.profile'})
    x, rho, u = load_profile(spec.profile)
    u_fn = (lambda y: np.interp(y, x, u)) if u is not None else None
    return ic_custom(spec, lambda y: np.interp(y, x, rho), u_fn)


# ============================================================================
# REGULARIZATION AND PROJECTION
# ============================================================================

def regularize_ic(f: EulerianField, p: ModelParams) -> EulerianField:
    """Lift the density above c0 eps^(1/(2 alpha - 2 theta)) and restore unit mass.

    The additive lift is inflated so the floor survives the mass rescale.
    """
    if p.eps == 0:
        logger.warning("regularize_ic called with eps = 0; returning the field unchanged")
        return f.with_flag("regularization-noop")
    if p.eps < 0 or not 0 < p.theta < 0.5:
        raise PreconditionError("regularization needs eps > 0 and 0 < theta < 1/2",
                                context={'eps': p.eps, 'theta': p.theta})

    floor = regularization_floor(p)
    length = f.length
    if floor * length >= 1:
        raise PreconditionError(f"floor {floor:.4g} too large for domain length {length:.4g}",
                                context={'floor': floor, 'length': length})

    mass = f.mass
    lift = floor * mass / (1.0 - floor * length)
    scale = 1.0 / (mass + lift * length)
    rho = (f.rho + lift) * scale
    logger.debug(f"Regularized with floor={floor:.4e}, lift={lift:.4e}")
    return f.with_fields(rho=rho, vacuum_at=None, scale=f.scale * scale,
                         flags=f.flags + ("regularized",))


def project_to_grid(f: EulerianField, N: int, pinned_request: bool = False,
                    bc: Optional[BoundaryCondition] = None) -> StaggeredState:
    """Equal-mass sampling onto N Lagrangian cells, optionally pinning the vacuum cell"""
    if N < 3:
        raise PreconditionError("projection needs N >= 3", context={'N': N})

    s = eulerian_to_lagrangian(f, n_cells=N, bc=bc)
    if not pinned_request:
        return s.validate()

    if N % 2 == 0:
        raise PinningError("pinning needs an odd cell count", context={'N': N})
    if f.vacuum_at is None:
        raise PinningError("pinning requested on vacuum-free data", context={'flags': f.flags})

    k = N // 2
    label = float(np.interp(f.vacuum_at, f.x, f.cumulative_mass()))
    if not k * s.h - 1e-12 <= label <= (k + 1) * s.h + 1e-12:
        raise PinningError(f"vacuum at x={f.vacuum_at} does not fall in the centre cell {k}",
                           context={'label': label, 'cell': k, 'h': s.h})

    rho = s.rho.copy()
    rho[k] = 0.0
    return s.with_fields(rho=rho, pinned_cell=k).validate()


# ============================================================================
# PRESETS
# ============================================================================

SHALLOW_WATER = ModelParams(alpha=1.0, gamma=2.0)

PRESETS: Dict[str, ScenarioPreset] = {
    "shallow-water-point-vacuum": ScenarioPreset(
        name="shallow-water-point-vacuum",
        description="Saint-Venant point vacuum rho0 ~ |x - 1/2|^2, regularized, walls",
        scenario=ScenarioSpec(kind=ScenarioKind.POINT_VACUUM, sigma=2.0, x0=0.5, N=201,
                              bc=BoundaryCondition.DIRICHLET),
        params=replace(SHALLOW_WATER, eps=1e-6),
        integrator=IntegratorConfig(t_end=50.0, sample_interval=0.05),
    ),
    "shallow-water-piece-vacuum": ScenarioPreset(
        name="shallow-water-piece-vacuum",
        description="Saint-Venant vacuum block [0.4, 0.6] with quadratic flanks, regularized, walls",
        scenario=ScenarioSpec(kind=ScenarioKind.PIECE_VACUUM, sigma=2.0, x0=0.4, x1=0.6, N=201,
                              bc=BoundaryCondition.DIRICHLET),
        params=replace(SHALLOW_WATER, eps=1e-6),
        integrator=IntegratorConfig(t_end=50.0, sample_interval=0.05),
    ),
    "smooth-periodic": ScenarioPreset(
        name="smooth-periodic",
        description="rho0 = 1 + 0.5 sin(2 pi x), u0 = 0, periodic",
        scenario=ScenarioSpec(kind=ScenarioKind.SMOOTH_PERIODIC, N=101, bc=BoundaryCondition.PERIODIC),
        params=SHALLOW_WATER,
        integrator=IntegratorConfig(t_end=1.0, sample_interval=0.01),
    ),
    "smooth-dirichlet": ScenarioPreset(
        name="smooth-dirichlet",
        description="rho0 = 1 + 0.5 cos(pi x), u0 = 0, walls",
        scenario=ScenarioSpec(kind=ScenarioKind.SMOOTH_DIRICHLET, N=101, bc=BoundaryCondition.DIRICHLET),
        params=SHALLOW_WATER,
        integrator=IntegratorConfig(t_end=1.0, sample_interval=0.01),
    ),
}


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown scenario preset '{name}'",
                             context={'known': sorted(PRESETS)}) from None


# ============================================================================
# ASSEMBLY
# ============================================================================

def build_field(spec: ScenarioSpec, p: ModelParams) -> EulerianField:
    match spec.kind:
        case ScenarioKind.POINT_VACUUM:
            return ic_point_vacuum(spec, p)
        case ScenarioKind.PIECE_VACUUM:
            return ic_piece_vacuum(spec, p)
        case ScenarioKind.SMOOTH_PERIODIC:
            return ic_smooth_periodic(spec)
        case ScenarioKind.SMOOTH_DIRICHLET:
            return ic_smooth_dirichlet(spec)
        case ScenarioKind.CUSTOM:
            return ic_profile(spec)


def build_initial_state(spec: ScenarioSpec, p: ModelParams) -> StaggeredState:
    """Constructor, regularization when eps > 0, then projection onto spec.N cells"""
    validate_params(p)
    f = build_field(spec, p)
    moment = momentum_moment(f, p.nu)
    logger.debug(f"Initial momentum moment {moment:.6g} (nu={p.nu})")
    if p.eps > 0:
        f = regularize_ic(f, p)
    logger.info(f"Built {spec.kind.value} initial state: N={spec.N}, bc={f.bc.value}, pinned={spec.pinned}")
    return project_to_grid(f, spec.N, pinned_request=spec.pinned, bc=spec.bc)
