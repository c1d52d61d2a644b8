import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from Core.params import ModelParams  # noqa: E402
from Core.state import BoundaryCondition, StaggeredState  # noqa: E402
from Utils.diagnostics import DiagnosticsRecord  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def shallow_water():
    return ModelParams(alpha=1.0, gamma=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def uniform_state(n: int, bc=BoundaryCondition.PERIODIC, rho: float = 1.0, u: float = 0.0) -> StaggeredState:
    bc = BoundaryCondition.parse(bc)
    nodes = n if bc.is_periodic else n + 1
    velocity = np.full(nodes, u)
    if bc.wall_left:
        velocity[0] = 0.0
    if bc.wall_right:
        velocity[-1] = 0.0
    return StaggeredState(h=rho / n, t=0.0, rho=np.full(n, rho), u=velocity, bc=bc)


def random_state(rng, n: int, bc=BoundaryCondition.PERIODIC, pinned: bool = False) -> StaggeredState:
    """Smooth-ish positive random state with unit Lagrangian mass"""
    bc = BoundaryCondition.parse(bc)
    rho = rng.uniform(0.5, 1.5, n)
    nodes = n if bc.is_periodic else n + 1
    u = rng.uniform(-0.5, 0.5, nodes)
    if bc.wall_left:
        u[0] = 0.0
    if bc.wall_right:
        u[-1] = 0.0
    pinned_cell = None
    if pinned:
        pinned_cell = n // 2
        rho[pinned_cell] = 0.0
    return StaggeredState(h=1.0 / n, t=0.0, rho=rho, u=u, bc=bc, pinned_cell=pinned_cell)


def record(t: float, **values) -> DiagnosticsRecord:
    """Zero-filled diagnostics record at time t with selected columns set"""
    row = {name: 0.0 for name in DiagnosticsRecord.field_names()}
    row.update(t=t, pinned_cell=-1)
    row.update(values)
    return DiagnosticsRecord(**row)
