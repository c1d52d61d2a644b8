# ============================================================================
# VacuumFlow - 1D compressible Navier-Stokes with degenerate viscosity
# ============================================================================

import logging
import sys

from dotenv import load_dotenv

from Core.Cli import Cli
from Core.logging_setup import configure_logging, level_from_int

load_dotenv()

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    cli = Cli()
    args = cli.parse(argv)
    configure_logging(level_from_int(args.log_level))
    logger.info(f"Running command '{args.command}'")
    return cli.dispatch(args)


if __name__ == '__main__':
    sys.exit(main())
