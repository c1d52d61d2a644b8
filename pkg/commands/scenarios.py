# commands/scenarios.py
# ============================================================================
# scenarios: list the named presets
# ============================================================================

import logging
from typing import List

from Utils.scenarios import PRESETS

logger = logging.getLogger(__name__)


def cmd_scenarios() -> List[str]:
    lines = []
    for name, preset in sorted(PRESETS.items()):
        spec = preset.scenario
        lines.append(f"{name:<30} {preset.description} "
                     f"[alpha={preset.params.alpha}, gamma={preset.params.gamma}, eps={preset.params.eps}, "
                     f"N={spec.N}, bc={spec.bc.value}, t_end={preset.integrator.t_end}]")
    return lines


def _handle(args) -> int:
    for line in cmd_scenarios():
        print(line)
    return 0


def setup(subparsers):
    parser = subparsers.add_parser('scenarios', help="List scenario presets")
    parser.set_defaults(handler=_handle)
