# commands/export.py
# ============================================================================
# Series, snapshot, restart-sidecar and summary files
# ============================================================================

import csv
import json
import logging
import zlib
from pathlib import Path
from typing import Any, Dict, List, Sequence

import msgpack
import numpy as np

from Core.errors import ConfigError
from Core.state import StaggeredState
from Utils.coords import lagrangian_to_eulerian
from Utils.diagnostics import DiagnosticsRecord

logger = logging.getLogger(__name__)

SIDECAR_VERSION = 1


def _cell(value: Any) -> str:
    # repr gives the shortest round-trip decimal for binary64
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


# ============================================================================
# SERIES
# ============================================================================

def write_series_csv(path: Path, series: Sequence[DiagnosticsRecord]) -> Path:
    names = DiagnosticsRecord.field_names()
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for record in series:
            writer.writerow([_cell(getattr(record, name)) for name in names])
    logger.info(f"Wrote {len(series)} series rows to {path}")
    return path


def read_series_csv(path: Path) -> List[DiagnosticsRecord]:
    names = DiagnosticsRecord.field_names()
    try:
        with open(path, newline='') as handle:
            rows = list(csv.DictReader(handle))
    except OSError as e:
        raise ConfigError(f"cannot read series file {path}", context={'path': str(path)}, cause=e) from e

    series = []
    for number, row in enumerate(rows, start=2):
        missing = [name for name in names if name not in row]
        if missing:
            raise ConfigError(f"series file {path} lacks columns {missing}", context={'path': str(path)})
        try:
            values = {name: float(row[name]) for name in names if name != 'pinned_cell'}
            values['pinned_cell'] = int(row['pinned_cell'])
        except ValueError as e:
            raise ConfigError(f"series file {path}, line {number}: bad value", context={'line': number}, cause=e) from e
        series.append(DiagnosticsRecord(**values))
    return series


# ============================================================================
# SNAPSHOTS
# ============================================================================

def write_snapshot_csv(path: Path, s: StaggeredState) -> Path:
    """x, rho, u per Eulerian node; a node carries the density of the cell to its right"""
    f = lagrangian_to_eulerian(s)
    rho_nodes = np.append(f.rho, f.rho[-1])
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['x', 'rho', 'u'])
        for x, rho, u in zip(f.x, rho_nodes, f.u):
            writer.writerow([_cell(x), _cell(rho), _cell(u)])
    return path


def pack_state(s: StaggeredState) -> bytes:
    payload = {
        'version': SIDECAR_VERSION,
        'h': float(s.h),
        't': float(s.t),
        'origin': float(s.origin),
        'bc': s.bc.value,
        'pinned_cell': s.pinned_cell,
        'rho': s.rho.tolist(),
        'u': s.u.tolist(),
    }
    return zlib.compress(msgpack.packb(payload, use_bin_type=True))


def unpack_state(blob: bytes) -> StaggeredState:
    payload = msgpack.unpackb(zlib.decompress(blob), raw=False)
    if payload.get('version') != SIDECAR_VERSION:
        raise ConfigError("unsupported restart sidecar version", context={'version': payload.get('version')})
    return StaggeredState(
        h=payload['h'],
        t=payload['t'],
        rho=np.asarray(payload['rho'], dtype=float),
        u=np.asarray(payload['u'], dtype=float),
        bc=payload['bc'],
        pinned_cell=payload['pinned_cell'],
        origin=payload['origin'],
    )


def save_state(path: Path, s: StaggeredState) -> Path:
    Path(path).write_bytes(pack_state(s))
    return path


def load_state(path: Path) -> StaggeredState:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read restart sidecar {path}", context={'path': str(path)}, cause=e) from e
    state = unpack_state(blob).validate()
    logger.info(f"Loaded restart state from {path} (t={state.t:.6g}, N={state.n_cells})")
    return state


def write_snapshots(directory: Path, snapshots: Sequence[StaggeredState]) -> List[Path]:
    written = []
    for index, s in enumerate(snapshots):
        stem = directory / f"snapshot_{index:04d}"
        written.append(write_snapshot_csv(stem.with_suffix('.csv'), s))
        written.append(save_state(stem.with_suffix('.msgpack'), s))
    logger.info(f"Wrote {len(snapshots)} snapshots to {directory}")
    return written


# ============================================================================
# SUMMARY
# ============================================================================

def write_summary(path: Path, summary: Dict[str, Any]) -> Path:
    with open(path, 'w') as handle:
        json.dump(summary, handle, indent=2, default=str)
    logger.info(f"Wrote summary to {path}")
    return path
