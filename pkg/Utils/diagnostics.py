# Utils/diagnostics.py
# ============================================================================
# Functionals on states and time series
# ============================================================================
#
# Per-state evaluators (energy, BD entropy, g, velocity gradients) feed one
# DiagnosticsRecord per sample; series-level analysis (vacuum vanishing,
# blow-up indicator, decay and envelope fits) consumes lists of records.

import logging
import math
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from Core.errors import CoverageError, DomainError, EmptyWindowError, InsufficientSamplesError
from Core.params import ModelParams, internal_energy, pi_fn, viscous_coefficient
from Core.state import BoundaryCondition, EulerianField, StaggeredState

from .coords import lagrangian_to_eulerian
from .kernels import rates_into
from .scheme import cell_jumps

logger = logging.getLogger(__name__)

MIN_DECAY_SAMPLES = 5


# ============================================================================
# RECORDS
# ============================================================================

@dataclass(frozen=True)
class DiagnosticsConfig:
    """Reference quantities for the functionals; unset values are resolved from the initial state"""
    b: Optional[float] = None
    rho_bar: Optional[float] = None
    u_s: Optional[float] = None


@dataclass
class DiagnosticsHistory:
    """Running time integrals, accumulated by the integrator on every accepted step"""
    dissipation_cum: float = 0.0
    ux_linf_cum: float = 0.0
    bd_dissipation_cum: float = 0.0
    origin0: float = 0.0

    def accumulate(self, dt: float, before: "StepRates", after: "StepRates"):
        self.dissipation_cum += 0.5 * dt * (before.dissipation + after.dissipation)
        self.ux_linf_cum += 0.5 * dt * (before.ux_linf + after.ux_linf)
        self.bd_dissipation_cum += 0.5 * dt * (before.bd_dissipation + after.bd_dissipation)

    def absorb(self, gained: np.ndarray):
        """Add (dissipation, ux_linf, bd_dissipation) integrals accumulated elsewhere"""
        self.dissipation_cum += float(gained[0])
        self.ux_linf_cum += float(gained[1])
        self.bd_dissipation_cum += float(gained[2])


@dataclass(frozen=True)
class StepRates:
    dissipation: float
    ux_linf: float
    bd_dissipation: float


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    volume: float
    energy: float
    energy_pi: float
    dissipation_cum: float
    bd_entropy: float
    bd_dissipation_cum: float
    min_rho: float
    max_rho: float
    ux_linf: float
    ux_linf_cum: float
    flux_linf: float
    u_tv: float
    l2_dist: float
    g_val: float
    anchor_drift: float
    u_moment: float
    pinned_cell: int = -1

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.field_names()}


@dataclass(frozen=True)
class DecayFit:
    c0: float
    mu0: float
    r2: float
    t_start: float
    n_samples: int = 0
    excluded: int = 0
    degenerate: bool = False


@dataclass(frozen=True)
class EnvelopeFit:
    a_minus: float
    a_plus: float
    sigma_used: float
    max_violation: float = 0.0


@dataclass(frozen=True)
class BlowupReport:
    integral: float
    peak: float
    peak_time: float


# ============================================================================
# DISCRETE GRADIENTS
# ============================================================================

def velocity_gradient_field(s: StaggeredState) -> np.ndarray:
    """Eulerian u_x = rho * u_y on every cell; the pinned cell gives 0"""
    return s.rho * cell_jumps(s) / s.h


def node_gradient(s: StaggeredState, q: np.ndarray) -> np.ndarray:
    """(q_i - q_{i-1})/h at every node.

    End nodes of a non-periodic grid take the one-sided difference of the
    nearest cell pair.
    """
    if s.bc.is_periodic:
        return (q - np.roll(q, 1)) / s.h
    inner = np.diff(q) / s.h
    if inner.size == 0:
        return np.zeros(q.size + 1)
    return np.concatenate(([inner[0]], inner, [inner[-1]]))


def node_weights(s: StaggeredState) -> np.ndarray:
    """Dual-cell mass of each node: h, halved at the ends of a non-periodic grid"""
    weights = np.full(s.n_nodes, s.h)
    if not s.bc.is_periodic:
        weights[0] = weights[-1] = 0.5 * s.h
    return weights


def step_rates(s: StaggeredState, p: ModelParams) -> StepRates:
    """Viscous dissipation, max |u_x| and BD dissipation; the integrands of the running integrals"""
    out = np.empty(3)
    rates_into(s.rho, s.u, float(s.h), s.bc.is_periodic, float(p.a1), float(p.a2), float(p.gamma),
               float(p.alpha), float(p.eps), float(p.theta), out)
    return StepRates(dissipation=float(out[0]), ux_linf=float(out[1]), bd_dissipation=float(out[2]))


# ============================================================================
# STATE FUNCTIONALS
# ============================================================================

def kinetic_energy(s: StaggeredState) -> float:
    return float(0.5 * np.sum(s.u ** 2) * s.h)


def energy(s: StaggeredState, p: ModelParams) -> float:
    """Sum (u^2/2 + a1 e(rho)) h with the pinned cell contributing 0"""
    active = s.active_mask
    return kinetic_energy(s) + float(np.sum(internal_energy(s.rho[active], p)) * s.h)


def energy_pi(s: StaggeredState, p: ModelParams) -> float:
    return kinetic_energy(s) + float(np.sum(p.a1 * np.asarray(pi_fn(s.rho, p.gamma))) * s.h)


def bd_entropy(s: StaggeredState, p: ModelParams) -> float:
    active = s.active_mask
    total = float(np.sum(s.u ** 2) * s.h)
    weights = node_weights(s)
    total += float(np.sum(node_gradient(s, s.rho ** p.alpha) ** 2 * weights))
    if p.eps > 0:
        total += p.eps ** 2 * float(np.sum(node_gradient(s, s.rho ** p.theta) ** 2 * weights))
    total += float(np.sum(internal_energy(s.rho[active], p)) * s.h)
    return total


def velocity_moment(s: StaggeredState, nu: float) -> float:
    """Sum |u|^(2 + nu) over nodes, weighted by dual-cell mass: the Lagrangian form of int rho |u|^(2 + nu) dx"""
    return float(np.sum(np.abs(s.u) ** (2.0 + nu) * node_weights(s)))


def default_b(p: ModelParams) -> float:
    return max(p.alpha + p.gamma - 1, 2 * p.alpha + 1, 1.0)


def g_functional_field(f: EulerianField, b: float) -> float:
    """||rho^b - mean(rho^b)||^4 in L^4 over the field's cells"""
    widths = f.widths
    q = f.rho ** b
    mean = float(np.sum(q * widths) / np.sum(widths))
    return float(np.sum((q - mean) ** 4 * widths))


def g_functional(s: StaggeredState, p: ModelParams, b: Optional[float] = None) -> float:
    return g_functional_field(lagrangian_to_eulerian(s), default_b(p) if b is None else b)


def dual_widths(f: EulerianField) -> np.ndarray:
    """Control-volume width of each velocity node"""
    widths = f.widths
    if f.bc.is_periodic:
        return 0.5 * (widths + np.roll(widths, 1))
    dual = np.empty(widths.size + 1)
    dual[0] = 0.5 * widths[0]
    dual[-1] = 0.5 * widths[-1]
    dual[1:-1] = 0.5 * (widths[1:] + widths[:-1])
    return dual


def equilibrium(s0: StaggeredState) -> Tuple[float, float]:
    """(rho_bar0, u_s): mean density and the equilibrium velocity"""
    f = lagrangian_to_eulerian(s0)
    mass = s0.n_cells * s0.h
    rho_bar = mass / f.length
    if s0.bc is BoundaryCondition.DIRICHLET:
        return rho_bar, 0.0

    # total momentum in mass coordinates over total mass
    if s0.bc.is_periodic:
        momentum = float(np.sum(s0.u) * s0.h)
    else:
        momentum = float(np.sum(0.5 * (s0.u[1:] + s0.u[:-1])) * s0.h)
    return rho_bar, momentum / mass


def l2_distance(f: EulerianField, rho_bar: float, u_s: float) -> float:
    u = f.u[:-1] if f.bc.is_periodic else f.u
    rho_part = np.sum((f.rho - rho_bar) ** 2 * f.widths)
    u_part = np.sum((u - u_s) ** 2 * dual_widths(f))
    return float(math.sqrt(rho_part + u_part))


def density_upper_bound(e0: float, alpha: float, c0: float = 1.0) -> float:
    """Bound on rho from rho^alpha <= 1 + C0 E(0) + 1 on the unit domain"""
    return (2.0 + c0 * e0) ** (1.0 / alpha)


def resolve_config(cfg: Optional[DiagnosticsConfig], s0: StaggeredState, p: ModelParams) -> DiagnosticsConfig:
    cfg = cfg or DiagnosticsConfig()
    rho_bar, u_s = equilibrium(s0)
    return replace(
        cfg,
        b=default_b(p) if cfg.b is None else cfg.b,
        rho_bar=rho_bar if cfg.rho_bar is None else cfg.rho_bar,
        u_s=u_s if cfg.u_s is None else cfg.u_s,
    )


def sample(s: StaggeredState, p: ModelParams, diag_cfg: DiagnosticsConfig,
           history: DiagnosticsHistory) -> DiagnosticsRecord:
    """Evaluate every functional on one state.

    diag_cfg must already be resolved; history carries the running integrals.
    """
    if diag_cfg.rho_bar is None or diag_cfg.u_s is None:
        diag_cfg = resolve_config(diag_cfg, s, p)

    f = lagrangian_to_eulerian(s)
    active = s.active_mask
    rho_active = s.rho[active]
    jumps = cell_jumps(s)
    ux = velocity_gradient_field(s)

    # pinned cell carries label mass h with zero density
    mass = float(np.sum(f.rho * f.widths))
    if s.pinned_cell is not None:
        mass += s.h

    record = DiagnosticsRecord(
        t=s.t,
        mass=mass,
        volume=f.length,
        energy=energy(s, p),
        energy_pi=energy_pi(s, p),
        dissipation_cum=history.dissipation_cum,
        bd_entropy=bd_entropy(s, p),
        bd_dissipation_cum=history.bd_dissipation_cum,
        min_rho=float(rho_active.min()),
        max_rho=float(rho_active.max()),
        ux_linf=float(np.max(np.abs(ux))),
        ux_linf_cum=history.ux_linf_cum,
        flux_linf=float(np.max(np.abs(viscous_coefficient(s.rho, p) * jumps / s.h))),
        u_tv=float(np.sum(np.abs(jumps))),
        l2_dist=l2_distance(f, diag_cfg.rho_bar, diag_cfg.u_s),
        g_val=g_functional_field(f, diag_cfg.b if diag_cfg.b is not None else default_b(p)),
        anchor_drift=s.origin - history.origin0,
        u_moment=velocity_moment(s, p.nu),
        pinned_cell=-1 if s.pinned_cell is None else s.pinned_cell,
    )
    logger.debug(f"Sample t={s.t:.6g}: energy={record.energy:.10g} min_rho={record.min_rho:.4e} ux_linf={record.ux_linf:.4e}")
    return record


# ============================================================================
# SERIES ANALYSIS
# ============================================================================

def series_column(series: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
    return np.asarray([getattr(r, name) for r in series], dtype=float)


def vacuum_vanish_time(series: Sequence[DiagnosticsRecord], rho_thresh: float, hold: float) -> Optional[float]:
    """Earliest sample time T with min_rho >= rho_thresh on every sample in [T, T + hold]"""
    if not series:
        raise DomainError("vacuum_vanish_time needs a non-empty series")

    t = series_column(series, 't')
    ok = series_column(series, 'min_rho') >= rho_thresh
    t_last = t[-1]
    tol = 1e-12 * max(1.0, abs(t_last))

    for i in np.flatnonzero(ok):
        if t[i] + hold > t_last + tol:
            break
        window = (t >= t[i] - tol) & (t <= t[i] + hold + tol)
        if np.all(ok[window]):
            return float(t[i])
    return None


def blowup_window(t0: float, eta: float, t_start: float) -> Optional[Tuple[float, float]]:
    """(t1, eta') with t1 = T0 - eta clipped to the series start; None when T0 is the start itself"""
    t1 = max(t0 - eta, t_start)
    width = t0 - t1
    if width <= 1e-12 * max(1.0, abs(t0)):
        return None
    return t1, width


def blowup_indicator(series: Sequence[DiagnosticsRecord], t1: float, eta: float) -> BlowupReport:
    """Trapezoid integral of ux_linf over [t1, t1 + eta], plus its peak"""
    t = series_column(series, 't')
    if t.size == 0 or t[0] > t1 + 1e-12 or t[-1] < t1 + eta - 1e-12:
        raise CoverageError(
            f"series does not cover [{t1}, {t1 + eta}]",
            context={'t1': t1, 'eta': eta, 'covered': (float(t[0]), float(t[-1])) if t.size else None}
        )

    ux = series_column(series, 'ux_linf')
    t_end = t1 + eta
    inside = (t > t1) & (t < t_end)
    grid = np.concatenate(([t1], t[inside], [t_end]))
    values = np.interp(grid, t, ux)

    peak_index = int(np.argmax(values))
    return BlowupReport(
        integral=float(trapezoid(values, grid)),
        peak=float(values[peak_index]),
        peak_time=float(grid[peak_index]),
    )


def decay_fit(series: Sequence[DiagnosticsRecord], t_start: float, column: str = 'l2_dist') -> DecayFit:
    """Least-squares line through (t, log y) for t >= t_start"""
    t = series_column(series, 't')
    y = series_column(series, column)
    window = t >= t_start
    positive = window & (y > 0)
    excluded = int(np.sum(window & ~positive))
    if excluded:
        logger.warning(f"decay_fit excluded {excluded} non-positive {column} samples")

    n = int(np.sum(positive))
    if n < MIN_DECAY_SAMPLES:
        raise InsufficientSamplesError(
            f"decay_fit needs {MIN_DECAY_SAMPLES} positive samples after t={t_start}, got {n}",
            context={'t_start': t_start, 'samples': n, 'excluded': excluded}
        )

    ts = t[positive] - t_start
    log_y = np.log(y[positive])

    if np.ptp(log_y) == 0.0:
        logger.warning("decay_fit on a constant series; r2 undefined, reported as 0")
        return DecayFit(c0=float(y[positive][0]), mu0=0.0, r2=0.0, t_start=t_start,
                        n_samples=n, excluded=excluded, degenerate=True)

    fit = stats.linregress(ts, log_y)
    r2 = min(max(float(fit.rvalue) ** 2, 0.0), 1.0)
    return DecayFit(c0=float(math.exp(fit.intercept)), mu0=float(-fit.slope), r2=r2,
                    t_start=t_start, n_samples=n, excluded=excluded)


def envelope_fit(f: EulerianField, x0: float, sigma: float, window: float,
                 a_ref_minus: Optional[float] = None, a_ref_plus: Optional[float] = None) -> EnvelopeFit:
    """Tightest constants with a_minus |x - X0|^sigma <= rho <= a_plus |x - X0|^sigma near X0.

    Cell midpoints within `window` of X0 are used; the cell containing X0 is skipped.
    """
    if window <= 0:
        raise DomainError("envelope window must be positive", context={'window': window})
    if not f.x[0] <= x0 <= f.x[-1]:
        raise DomainError(f"X0={x0} outside the field", context={'x0': x0})

    mid = f.midpoints
    dist = np.abs(mid - x0)
    owner = (f.x[:-1] <= x0) & (x0 <= f.x[1:])
    use = (dist <= window) & ~owner & (dist > 0)
    if not np.any(use):
        raise EmptyWindowError(f"no cells within {window} of X0={x0}", context={'x0': x0, 'window': window})

    ratio = f.rho[use] / dist[use] ** sigma
    a_minus = float(ratio.min())
    a_plus = float(ratio.max())

    violation = 0.0
    if a_ref_minus is not None and a_ref_minus > 0:
        violation = max(violation, (a_ref_minus - a_minus) / a_ref_minus)
    if a_ref_plus is not None and a_ref_plus > 0:
        violation = max(violation, (a_plus - a_ref_plus) / a_ref_plus)

    return EnvelopeFit(a_minus=a_minus, a_plus=a_plus, sigma_used=sigma, max_violation=max(violation, 0.0))
