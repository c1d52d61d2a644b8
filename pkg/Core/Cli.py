# Core/Cli.py
# ============================================================================
# Command-line front end: discovers command modules under commands/
# ============================================================================

import argparse
import importlib
import logging
import os
import pathlib
from typing import List, Optional

from .errors import ConfigError, ParameterError, VacuumFlowError

logger = logging.getLogger(__name__)

COMMANDS_DIR = pathlib.Path(__file__).resolve().parent.parent / 'commands'

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3


class Cli:
    def __init__(self, prog: str = "vacuumflow"):
        self.parser = argparse.ArgumentParser(
            prog=prog,
            description="1D compressible Navier-Stokes with degenerate viscosity: vacuum diagnostics",
        )
        self.parser.add_argument("--log-level", type=int, default=20, help="Logging level (10..50)")
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)
        self.added_commands: List[str] = []

    def load_commands(self) -> List[str]:
        """Import every commands/ module and let those exposing setup() register a sub-command"""
        root = COMMANDS_DIR.parent
        for dir in os.walk(COMMANDS_DIR):
            for file in sorted(dir[2]):
                if file.endswith('.py') and not file.startswith('__'):
                    path = pathlib.Path(dir[0]) / file
                    name = f"{path.parent.relative_to(root).as_posix().replace('/', '.')}.{path.stem}"
                    try:
                        module = importlib.import_module(name)
                    except ImportError as e:
                        logger.error(f'Failed to load command module {name}: {e}')
                        continue
                    if hasattr(module, 'setup'):
                        module.setup(self.subparsers)
                        self.added_commands.append(name)
                        logger.debug(f'Loaded command: {name}')
        return self.added_commands

    def parse(self, argv: Optional[List[str]] = None) -> argparse.Namespace:
        if not self.added_commands:
            self.load_commands()
        return self.parser.parse_args(argv)

    def dispatch(self, args: argparse.Namespace) -> int:
        """Run the selected handler and map failures onto exit codes"""
        try:
            return args.handler(args)
        except (ConfigError, ParameterError) as e:
            logger.error(f'Configuration error in "{args.command}": {e.describe()}')
            return EXIT_CONFIG_ERROR
        except VacuumFlowError as e:
            logger.error(f'Solver failure in "{args.command}": {e.describe()}')
            return EXIT_SOLVER_FAILURE
