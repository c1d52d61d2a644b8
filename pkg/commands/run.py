# commands/run.py
# ============================================================================
# run <config> [--restart sidecar]
# ============================================================================

import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from Core.errors import CoverageError, InsufficientSamplesError
from Utils.diagnostics import (DiagnosticsConfig, blowup_indicator, blowup_window, decay_fit,
                               density_upper_bound, series_column, vacuum_vanish_time)
from Core.params import validate_params
from Core.state import BoundaryCondition
from Utils.integrator import Integrator, RunOutput, Termination
from Utils.scenarios import ScenarioKind, build_initial_state

from .config import RunConfig, load_config, serialize_config
from .export import load_state, write_series_csv, write_snapshots, write_summary

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SOLVER_FAILURE = 3

VACUUM_KINDS = (ScenarioKind.POINT_VACUUM, ScenarioKind.PIECE_VACUUM)


def build_summary(out: RunOutput, config: RunConfig) -> Dict[str, Any]:
    """Termination, vacuum-vanishing time, decay fit, blow-up indicator and drifts of one run"""
    analysis = config.analysis
    series = out.series
    t = series_column(series, 't')
    min_rho = series_column(series, 'min_rho')
    ux = series_column(series, 'ux_linf')
    energy = series_column(series, 'energy')
    dissipation = series_column(series, 'dissipation_cum')

    summary: Dict[str, Any] = {
        'termination': out.termination.reason.value,
        'termination_time': out.termination.t,
        'termination_cell': out.termination.cell,
        'samples': len(series),
        'mass_drift': float(np.max(np.abs(series_column(series, 'mass') - series[0].mass))),
        'volume_drift': float(np.max(np.abs(series_column(series, 'volume') - series[0].volume))),
        'energy_balance_defect': float(np.max(np.abs(energy + dissipation - energy[0]))),
        'peak_ux_linf': float(ux.max()),
        'peak_ux_linf_time': float(t[int(np.argmax(ux))]),
        'density_upper_bound': density_upper_bound(series[0].bd_entropy, config.params.alpha),
        'metrics': out.metrics,
        'dirichlet_trace': (validate_params(config.params).dirichlet_trace
                            if config.scenario.bc is BoundaryCondition.DIRICHLET else None),
        'flags': [],
    }

    vacuum_initially = bool(min_rho[0] < analysis.rho_thresh) or series[0].pinned_cell >= 0
    t0 = vacuum_vanish_time(series, analysis.rho_thresh, analysis.hold) if vacuum_initially else None
    summary['vacuum_initially'] = vacuum_initially
    summary['vacuum_vanish_time'] = t0
    if not vacuum_initially and config.scenario.kind in VACUUM_KINDS:
        # the grid averages the vacuum away before the first step
        logger.warning(f"Initial min rho {min_rho[0]:.4g} is above rho_thresh={analysis.rho_thresh} at N={config.scenario.N}")
        summary['flags'].append('vacuum-unresolved')

    summary['blowup'] = None
    window = blowup_window(t0, analysis.blowup_eta, float(t[0])) if t0 is not None else None
    if t0 is not None and window is None:
        summary['flags'].append('vacuum-unresolved')
    elif window is not None:
        if t0 - analysis.blowup_eta < window[0]:
            summary['flags'].append('blowup-window-clipped')
        try:
            summary['blowup'] = asdict(blowup_indicator(series, *window))
        except CoverageError as e:
            logger.warning(f"Blow-up indicator skipped: {e}")

    t_start = (t0 or 0.0) + analysis.decay_offset
    try:
        summary['decay_fit'] = asdict(decay_fit(series, t_start))
    except InsufficientSamplesError as e:
        logger.info(f"No decay fit: {e}")
        summary['decay_fit'] = None

    return summary


def cmd_run(config: RunConfig, restart: Optional[str] = None,
            output_dir: Optional[Path] = None) -> Tuple[int, RunOutput, Dict[str, Any]]:
    """Run one configuration and write series, snapshots and summary into its run directory"""
    s0 = load_state(restart) if restart else build_initial_state(config.scenario, config.params)

    integrator = Integrator(config.params, config.integrator, config.diagnostics or DiagnosticsConfig())
    out = integrator.run(s0)

    directory = Path(output_dir) if output_dir is not None else config.output_dir()
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.txt").write_text(serialize_config(config))
    write_series_csv(directory / "series.csv", out.series)
    write_snapshots(directory, out.snapshots)

    summary = build_summary(out, config)
    write_summary(directory / "summary.json", summary)

    if out.termination.reason is not Termination.COMPLETED:
        logger.error(f"Solver failure: {out.termination.reason.value} at t={out.termination.t}")
        return EXIT_SOLVER_FAILURE, out, summary
    return EXIT_OK, out, summary


def _handle(args) -> int:
    config = load_config(args.config)
    code, _, summary = cmd_run(config, restart=args.restart)
    logger.info(f"Run finished: {summary['termination']}, T0={summary['vacuum_vanish_time']}")
    return code


def setup(subparsers):
    parser = subparsers.add_parser('run', help="Run a simulation from a config file")
    parser.add_argument('config', help="Path to the key = value run configuration")
    parser.add_argument('--restart', default=None, help="Continue from a .msgpack snapshot sidecar")
    parser.set_defaults(handler=_handle)
