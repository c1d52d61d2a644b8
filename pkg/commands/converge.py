# commands/converge.py
# ============================================================================
# converge <config> --levels 51,101,201
# ============================================================================

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from Core.errors import ConvergenceError
from Core.state import StaggeredState
from Utils.coords import eulerian_to_lagrangian, lagrangian_to_eulerian
from Utils.integrator import Integrator, RunOutput
from Utils.scenarios import build_initial_state

from .config import RunConfig, load_config
from .export import write_summary

logger = logging.getLogger(__name__)

MAX_WORKERS = 4


@dataclass
class ConvergenceReport:
    levels: List[int]
    differences: List[float]
    orders: List[Optional[float]]
    peak_ux_linf: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)


def restricted_l1(coarse: StaggeredState, fine: StaggeredState) -> float:
    """L1 distance in mass coordinates after restricting the fine density onto the coarse cells"""
    active = coarse.active_mask
    if fine.n_cells == coarse.n_cells:
        return float(np.sum(np.abs(coarse.rho[active] - fine.rho[active])) * coarse.h)

    fine_field = lagrangian_to_eulerian(fine)
    if fine.pinned_cell is not None:
        # the restriction needs the mass carried by the vacuum cell too
        fine_field = fine_field.with_fields(rho=np.where(fine_field.rho > 0, fine_field.rho,
                                                         fine.h / fine_field.widths))
    restricted = eulerian_to_lagrangian(fine_field, n_cells=coarse.n_cells, bc=coarse.bc)
    return float(np.sum(np.abs(coarse.rho[active] - restricted.rho[active])) * coarse.h)


def convergence_report(solutions: Sequence[Tuple[int, StaggeredState]],
                       peaks: Optional[Sequence[float]] = None) -> ConvergenceReport:
    """Pairwise differences and observed orders p = log2(e_coarse / e_fine)"""
    levels = [n for n, _ in solutions]
    differences = [restricted_l1(coarse, fine)
                   for (_, coarse), (_, fine) in zip(solutions[:-1], solutions[1:])]

    flags = [] if len(differences) >= 2 else ['order-undefined']
    orders: List[Optional[float]] = []
    for e_coarse, e_fine in zip(differences[:-1], differences[1:]):
        if e_coarse > 0 and e_fine > 0:
            orders.append(math.log2(e_coarse / e_fine))
        else:
            orders.append(None)
            if 'order-undefined' not in flags:
                flags.append('order-undefined')

    peaks = list(peaks or [])
    if peaks and any(b < a for a, b in zip(peaks[:-1], peaks[1:])):
        logger.warning(f"Peak |u_x| not monotone under refinement: {peaks}")
        flags.append('non-monotone-peak')

    return ConvergenceReport(levels=levels, differences=differences, orders=orders,
                             peak_ux_linf=peaks, flags=flags)


def _check_levels(levels: Sequence[int]):
    """Cell counts must not decrease; a repeated level compares a run with itself"""
    if len(levels) < 2:
        raise ConvergenceError("a convergence study needs at least two levels", context={'levels': list(levels)})
    if any(b < a for a, b in zip(levels[:-1], levels[1:])):
        raise ConvergenceError(f"levels are not nested: {list(levels)}", context={'levels': list(levels)})


def _run_level(config: RunConfig, n: int) -> RunOutput:
    level = replace(config, scenario=replace(config.scenario, N=n))
    s0 = build_initial_state(level.scenario, level.params)
    return Integrator(level.params, level.integrator, level.diagnostics).run(s0)


def cmd_converge(config: RunConfig, levels: Sequence[int],
                 output_dir: Optional[Path] = None) -> Tuple[int, ConvergenceReport]:
    """Run every level concurrently and compare the final densities"""
    _check_levels(levels)
    logger.info(f"Convergence study over levels {list(levels)}")

    with ThreadPoolExecutor(max_workers=min(MAX_WORKERS, len(levels))) as pool:
        outputs = list(pool.map(lambda n: _run_level(config, n), levels))

    failed = [n for n, out in zip(levels, outputs) if not out.completed]
    if failed:
        raise ConvergenceError(f"levels {failed} did not complete", context={'failed': failed})

    peaks = [max(r.ux_linf for r in out.series) for out in outputs]
    report = convergence_report([(n, out.final_state) for n, out in zip(levels, outputs)], peaks)

    directory = Path(output_dir) if output_dir is not None else config.output_dir()
    directory.mkdir(parents=True, exist_ok=True)
    write_summary(directory / "convergence.json", asdict(report))
    logger.info(f"Differences {report.differences}, orders {report.orders}")
    return 0, report


def _parse_levels(text: str) -> List[int]:
    return [int(part) for part in text.split(',') if part.strip()]


def _handle(args) -> int:
    config = load_config(args.config)
    code, _ = cmd_converge(config, _parse_levels(args.levels))
    return code


def setup(subparsers):
    parser = subparsers.add_parser('converge', help="Self-convergence study over grid levels")
    parser.add_argument('config', help="Path to the key = value run configuration")
    parser.add_argument('--levels', default="51,101,201", help="Comma-separated cell counts")
    parser.set_defaults(handler=_handle)
