import argparse
import logging
import sys
from typing import Optional
from typing import Sequence

import yaml

from . import __version__
from .commands import evaluate as evaluate_command
from .commands import features as features_command
from .commands import simulate as simulate_command
from .commands import train as train_command
from .core.config import settings
from .errors import ShaftwatchError

logger = logging.getLogger(__name__)

EXIT_INVALID_INPUT = 3
EXIT_FILE_NOT_FOUND = 4


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shaftwatch",
        description="Unbalance detection on rotating-shaft vibration data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="more log output (-v info, -vv debug)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    simulate_command.register(subparsers)
    features_command.register(subparsers)
    train_command.register(subparsers)
    evaluate_command.register(subparsers)
    return parser


def configure_logging(verbosity: int) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, str(settings.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except ShaftwatchError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except FileNotFoundError as e:
        logger.error("%s", e)
        return EXIT_FILE_NOT_FOUND
    except (ValueError, yaml.YAMLError) as e:
        logger.error("Invalid input: %s", e)
        return EXIT_INVALID_INPUT
    except Exception:
        logger.exception("Unexpected error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
