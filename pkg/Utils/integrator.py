# Utils/integrator.py
# ============================================================================
# Explicit time integration with positivity guarding and the run driver
# ============================================================================

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from Core.errors import NegativeDensityError, PositivityError, PreconditionError
from Core.params import ModelParams, sound_speed, validate_params, viscous_coefficient
from Core.state import StaggeredState

from . import kernels
from .diagnostics import (DiagnosticsConfig, DiagnosticsHistory, DiagnosticsRecord, StepRates,
                          resolve_config, sample, step_rates)
from .scheme import StateDerivative, check_pinning_compatible, rhs

logger = logging.getLogger(__name__)

TINY = np.finfo(float).tiny


class Method(Enum):
    RK4 = "rk4"
    RK2 = "rk2"
    EULER = "euler"


STAGES = {Method.EULER: 1, Method.RK2: 2, Method.RK4: 4}


class Termination(Enum):
    COMPLETED = "completed"
    POSITIVITY_FAILURE = "positivity_failure"
    DT_UNDERFLOW = "dt_underflow"


# ============================================================================
# CONFIGURATION AND OUTPUT
# ============================================================================

@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.RK4
    cfl_safety: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-14
    t_end: float = 1.0
    sample_interval: float = 0.01
    positivity_floor: float = 0.0
    snapshot_times: Tuple[float, ...] = ()
    snapshot_interval: float = 0.0
    max_rejections: int = 40

    def __post_init__(self):
        object.__setattr__(self, 'method', Method(self.method) if not isinstance(self.method, Method) else self.method)
        object.__setattr__(self, 'snapshot_times', tuple(float(t) for t in self.snapshot_times))

    def validate(self) -> "IntegratorConfig":
        checks = [
            (0 < self.cfl_safety <= 1, "0 < cfl_safety <= 1"),
            (0 < self.dt_min <= self.dt_max, "0 < dt_min <= dt_max"),
            (self.t_end >= 0, "t_end >= 0"),
            (self.sample_interval > 0, "sample_interval > 0"),
            (self.positivity_floor >= 0, "positivity_floor >= 0"),
            (self.snapshot_interval >= 0, "snapshot_interval >= 0"),
            (self.max_rejections >= 1, "max_rejections >= 1"),
            (all(0 <= t <= self.t_end for t in self.snapshot_times), "snapshot times within [0, t_end]"),
        ]
        for holds, constraint in checks:
            if not holds:
                raise PreconditionError(f"integrator config violates {constraint}",
                                        context={'constraint': constraint, 'config': self})
        return self


@dataclass(frozen=True)
class TerminationInfo:
    reason: Termination = Termination.COMPLETED
    t: Optional[float] = None
    cell: Optional[int] = None


@dataclass
class RunOutput:
    series: List[DiagnosticsRecord] = field(default_factory=list)
    snapshots: List[StaggeredState] = field(default_factory=list)
    termination: TerminationInfo = field(default_factory=TerminationInfo)
    metrics: Dict[str, Any] = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.termination.reason is Termination.COMPLETED

    @property
    def final_state(self) -> Optional[StaggeredState]:
        return self.snapshots[-1] if self.snapshots else None


# ============================================================================
# STEP CONTROL
# ============================================================================

def stable_dt(s: StaggeredState, p: ModelParams, cfg: IntegratorConfig) -> float:
    """cfl_safety * min(h^2 / (2 max K), h / (max c * max rho), dt_max), clamped to [dt_min, dt_max]"""
    rho = s.rho
    max_k = float(np.max(viscous_coefficient(rho, p)))
    max_c = float(np.max(sound_speed(rho, p)))
    max_rho = float(np.max(rho))

    diffusive = s.h ** 2 / (2.0 * max_k) if max_k > 0 else np.inf
    acoustic = s.h / (max_c * max_rho + TINY)
    dt = cfg.cfl_safety * min(diffusive, acoustic, cfg.dt_max)
    return float(min(max(dt, cfg.dt_min), cfg.dt_max))


def _advance(s: StaggeredState, d: StateDerivative, dt: float) -> StaggeredState:
    return s.with_fields(
        t=s.t + dt,
        rho=s.rho + dt * d.drho,
        u=s.u + dt * d.du,
        origin=s.origin + dt * d.dorigin,
    )


def _combine(weights: List[float], stages: List[StateDerivative]) -> StateDerivative:
    drho = sum(w * k.drho for w, k in zip(weights, stages))
    du = sum(w * k.du for w, k in zip(weights, stages))
    dorigin = sum(w * k.dorigin for w, k in zip(weights, stages))
    return StateDerivative(drho=drho, du=du, dorigin=dorigin)


def _stages(s: StaggeredState, dt: float, f: Callable[[StaggeredState], StateDerivative],
            method: Method) -> StateDerivative:
    """Effective derivative of one explicit step"""
    k1 = f(s)
    match method:
        case Method.EULER:
            return k1
        case Method.RK2:
            k2 = f(_advance(s, k1, dt))
            return _combine([0.5, 0.5], [k1, k2])
        case Method.RK4:
            k2 = f(_advance(s, k1, 0.5 * dt))
            k3 = f(_advance(s, k2, 0.5 * dt))
            k4 = f(_advance(s, k3, dt))
            return _combine([1 / 6, 1 / 3, 1 / 3, 1 / 6], [k1, k2, k3, k4])


def _enforce_constraints(s: StaggeredState) -> StaggeredState:
    u = s.u
    if not s.bc.is_periodic and (s.bc.wall_left or s.bc.wall_right):
        u = u.copy()
        if s.bc.wall_left:
            u[0] = 0.0
        if s.bc.wall_right:
            u[-1] = 0.0
    rho = s.rho
    if s.pinned_cell is not None:
        rho = rho.copy()
        rho[s.pinned_cell] = 0.0
    return s.with_fields(rho=rho, u=u)


# ============================================================================
# INTEGRATOR
# ============================================================================

class Integrator:
    """Explicit Runge-Kutta driver: compiled stepping between output times, step halving on rejection"""

    def __init__(self, params: ModelParams, config: IntegratorConfig,
                 diag_config: Optional[DiagnosticsConfig] = None):
        self.params = params
        self.config = config
        self.diag_config = diag_config
        self.metrics = {
            'accepted_steps': 0,
            'rejected_steps': 0,
            'rhs_evaluations': 0,
            'min_dt': None,
            'max_dt': None,
            'wall_time': 0.0,
        }

    def stable_dt(self, s: StaggeredState) -> float:
        return stable_dt(s, self.params, self.config)

    def _rhs(self, s: StaggeredState) -> StateDerivative:
        self.metrics['rhs_evaluations'] += 1
        return rhs(s, self.params)

    def step(self, s: StaggeredState, dt: float) -> StaggeredState:
        """Advance by dt; raises PositivityError when the step must be rejected"""
        if dt < 0:
            raise PreconditionError("time step must be non-negative", context={'dt': dt})
        if dt == 0:
            return s

        try:
            d = _stages(s, dt, self._rhs, self.config.method)
        except NegativeDensityError as e:
            raise PositivityError(f"stage density lost positivity at t={s.t:.6g}, dt={dt:.3e}",
                                  cell=e.context.get('cell'), t=s.t, cause=e)

        new = _enforce_constraints(_advance(s, d, dt))

        active = new.rho[new.active_mask]
        if active.size and active.min() <= self.config.positivity_floor:
            cell = int(np.flatnonzero(new.active_mask)[np.argmin(active)])
            raise PositivityError(
                f"density {new.rho[cell]:.3e} in cell {cell} under floor {self.config.positivity_floor} after step",
                cell=cell, t=s.t, context={'dt': dt}
            )
        return new

    def _record_dt(self, dt: float):
        self.metrics['accepted_steps'] += 1
        lo, hi = self.metrics['min_dt'], self.metrics['max_dt']
        self.metrics['min_dt'] = dt if lo is None else min(lo, dt)
        self.metrics['max_dt'] = dt if hi is None else max(hi, dt)

    def _event_times(self) -> Tuple[np.ndarray, set, set]:
        cfg = self.config
        tol = 1e-12 * max(1.0, cfg.t_end)

        n_samples = int(np.floor(cfg.t_end / cfg.sample_interval + 1e-9))
        sample_times = [m * cfg.sample_interval for m in range(1, n_samples + 1)]
        if cfg.t_end > 0 and (not sample_times or cfg.t_end - sample_times[-1] > tol):
            sample_times.append(cfg.t_end)

        snapshot_times = [t for t in cfg.snapshot_times if t > 0]
        if cfg.snapshot_interval > 0:
            n_snaps = int(np.floor(cfg.t_end / cfg.snapshot_interval + 1e-9))
            snapshot_times += [m * cfg.snapshot_interval for m in range(1, n_snaps + 1)]
        if cfg.t_end > 0:
            snapshot_times.append(cfg.t_end)

        # times are matched on a 1e-12 relative lattice
        events = np.unique(np.round(np.asarray(sample_times + snapshot_times, dtype=float) / tol) * tol)
        sample_keys = {round(t / tol) for t in sample_times}
        snapshot_keys = {round(t / tol) for t in snapshot_times}
        return events, sample_keys, snapshot_keys

    def _record_compiled(self, stats: np.ndarray):
        steps = int(stats[kernels.STEPS])
        self.metrics['accepted_steps'] += steps
        self.metrics['rhs_evaluations'] += int(stats[kernels.RHS_EVALS])
        if steps:
            lo, hi = self.metrics['min_dt'], self.metrics['max_dt']
            self.metrics['min_dt'] = float(stats[kernels.MIN_DT]) if lo is None else min(lo, float(stats[kernels.MIN_DT]))
            self.metrics['max_dt'] = float(stats[kernels.MAX_DT]) if hi is None else max(hi, float(stats[kernels.MAX_DT]))

    def _advance_compiled(self, s: StaggeredState, target: float, tol: float, rates: StepRates,
                          history: DiagnosticsHistory) -> Tuple[StaggeredState, StepRates, Optional[Tuple[int, float]]]:
        """Run the compiled loop towards target; the failure is (cell, rejected dt) or None"""
        p, cfg = self.params, self.config
        rho, u = s.rho.copy(), s.u.copy()
        clock = np.array([s.t, s.origin])
        rate_buf = np.array([rates.dissipation, rates.ux_linf, rates.bd_dissipation])
        gained = np.zeros(3)
        stats = np.array([0.0, 0.0, np.inf, 0.0])

        status, cell, dt = kernels.advance_to(
            rho, u, clock, float(target), float(tol), float(s.h),
            s.bc.is_periodic, s.bc.wall_left, s.bc.wall_right, -1 if s.pinned_cell is None else s.pinned_cell,
            float(p.a1), float(p.a2), float(p.gamma), float(p.alpha), float(p.eps), float(p.theta),
            STAGES[cfg.method], float(cfg.cfl_safety), float(cfg.dt_max), float(cfg.dt_min),
            float(cfg.positivity_floor), rate_buf, gained, stats,
        )
        history.absorb(gained)
        self._record_compiled(stats)

        new = s.with_fields(t=float(clock[0]), origin=float(clock[1]), rho=rho, u=u)
        failure = None if status == kernels.OK else (int(cell), float(dt))
        return new, StepRates(*(float(v) for v in rate_buf)), failure

    def _retry_halved(self, s: StaggeredState, dt: float, cell: int):
        """Halve a rejected dt until step() accepts; returns (state, dt) or the TerminationInfo"""
        cfg = self.config
        rejections = 0
        while True:
            rejections += 1
            self.metrics['rejected_steps'] += 1
            logger.warning(f"Step rejected at t={s.t:.6g} (cell {cell}), halving dt={dt:.3e}")
            dt *= 0.5
            if dt < cfg.dt_min:
                return TerminationInfo(reason=Termination.DT_UNDERFLOW, t=s.t, cell=cell)
            if rejections > cfg.max_rejections:
                return TerminationInfo(reason=Termination.POSITIVITY_FAILURE, t=s.t, cell=cell)
            try:
                return self.step(s, dt), dt
            except PositivityError as e:
                cell = e.cell

    def run(self, s0: StaggeredState) -> RunOutput:
        """Integrate s0 to t_end, sampling diagnostics and storing snapshots on the way"""
        p, cfg = self.params, self.config
        validate_params(p)
        cfg.validate()
        s0.validate()
        check_pinning_compatible(s0, p)

        started = time.perf_counter()
        diag_cfg = resolve_config(self.diag_config, s0, p)
        history = DiagnosticsHistory(origin0=s0.origin)
        tol = 1e-12 * max(1.0, cfg.t_end)

        out = RunOutput(series=[sample(s0, p, diag_cfg, history)], snapshots=[s0])
        events, sample_keys, snapshot_keys = self._event_times()
        logger.info(f"Run start: N={s0.n_cells}, bc={s0.bc.value}, method={cfg.method.value}, t_end={cfg.t_end}, events={events.size}")

        s = s0
        rates = step_rates(s, p)
        t0 = s0.t

        for target_offset in events:
            target = t0 + float(target_offset)
            while target - s.t > tol:
                s, rates, failure = self._advance_compiled(s, target, tol, rates, history)
                if failure is None:
                    break

                accepted = self._retry_halved(s, failure[1], failure[0])
                if isinstance(accepted, TerminationInfo):
                    return self._finish(out, s, p, diag_cfg, history, started, accepted)
                new, dt = accepted
                if abs(new.t - target) <= tol:
                    new = new.with_fields(t=target)
                new_rates = step_rates(new, p)
                history.accumulate(dt, rates, new_rates)
                self._record_dt(dt)
                s, rates = new, new_rates

            key = round(float(target_offset) / tol)
            if key in sample_keys:
                out.series.append(sample(s, p, diag_cfg, history))
            if key in snapshot_keys:
                out.snapshots.append(s)

        return self._finish(out, s, p, diag_cfg, history, started, TerminationInfo())

    def _finish(self, out: RunOutput, s: StaggeredState, p: ModelParams, diag_cfg: DiagnosticsConfig,
                history: DiagnosticsHistory, started: float, termination: TerminationInfo) -> RunOutput:
        if s.t > out.series[-1].t:
            out.series.append(sample(s, p, diag_cfg, history))
        if out.snapshots[-1] is not s:
            out.snapshots.append(s)

        self.metrics['wall_time'] = time.perf_counter() - started
        out.termination = termination
        out.metrics = self.get_metrics()

        if termination.reason is Termination.COMPLETED:
            logger.info(f"Run completed at t={s.t:.6g}: {self.metrics['accepted_steps']} steps, {self.metrics['rejected_steps']} rejected, {self.metrics['wall_time']:.2f}s")
        else:
            logger.error(f"Run terminated ({termination.reason.value}) at t={termination.t:.6g}, cell {termination.cell}")
        return out

    def get_metrics(self) -> Dict[str, Any]:
        """Step statistics of the most recent run"""
        return self.metrics.copy()


# ============================================================================
# FUNCTIONAL ENTRY POINTS
# ============================================================================

def step(s: StaggeredState, dt: float, p: ModelParams, cfg: Optional[IntegratorConfig] = None) -> StaggeredState:
    return Integrator(p, cfg or IntegratorConfig()).step(s, dt)


def run(s0: StaggeredState, p: ModelParams, cfg: IntegratorConfig,
        diag_cfg: Optional[DiagnosticsConfig] = None) -> RunOutput:
    return Integrator(p, cfg, diag_cfg).run(s0)
