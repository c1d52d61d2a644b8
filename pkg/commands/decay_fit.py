# commands/decay_fit.py
# ============================================================================
# decay-fit <series-file> --t-start T
# ============================================================================

import json
import logging
from dataclasses import asdict
from pathlib import Path

from Utils.diagnostics import DecayFit, decay_fit

from .export import read_series_csv

logger = logging.getLogger(__name__)


def cmd_decay_fit(series_path: str, t_start: float, column: str = 'l2_dist') -> DecayFit:
    series = read_series_csv(Path(series_path))
    fit = decay_fit(series, t_start, column=column)
    logger.info(f"Decay fit on {series_path}: mu0={fit.mu0:.6g}, c0={fit.c0:.6g}, r2={fit.r2:.6f}")
    return fit


def _handle(args) -> int:
    fit = cmd_decay_fit(args.series, args.t_start, args.column)
    print(json.dumps(asdict(fit), indent=2))
    return 0


def setup(subparsers):
    parser = subparsers.add_parser('decay-fit', help="Fit c0 exp(-mu0 (t - t_start)) to a series column")
    parser.add_argument('series', help="Series CSV written by run")
    parser.add_argument('--t-start', type=float, default=0.0, help="Fit window start")
    parser.add_argument('--column', default='l2_dist', help="Series column to fit")
    parser.set_defaults(handler=_handle)
