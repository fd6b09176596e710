"""
Rotascan - Command Line Interface
Loads the command groups, resolves configuration and turns failures into one-line errors
"""

import argparse
import importlib
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from dotenv import load_dotenv

from rotascan import __version__
from rotascan.commands import CommandContext, CommandGroup
from rotascan.errors import RotascanError, UsageError
from rotascan.parsers.config_parser import load_config

logger = logging.getLogger(__name__)

COMMAND_MODULES = [
    'rotascan.commands.imaging',
    'rotascan.commands.perception',
    'rotascan.commands.robotics',
]

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def configure_logging(level: Optional[str] = None) -> None:
    """Stderr logging, plus ROTASCAN_LOG_FILE when set"""
    level = (level or os.getenv("ROTASCAN_LOG_LEVEL") or "INFO").upper()
    if level not in logging.getLevelNamesMapping():
        raise UsageError(f"unknown log level '{level}'")
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv("ROTASCAN_LOG_FILE")
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def load_command_groups(modules: Sequence[str] = COMMAND_MODULES) -> List[CommandGroup]:
    groups: List[CommandGroup] = []
    for name in modules:
        importlib.import_module(name).setup(groups)
    logger.debug(f"Loaded {len(groups)}/{len(modules)} command groups")
    return groups


def build_parser(groups: Sequence[CommandGroup]) -> argparse.ArgumentParser:
    parser = _Parser(prog="rotascan", description="Rotating-prism hyperspectral scanning and sorting simulator")
    parser.add_argument("--version", action="version", version=f"rotascan {__version__}")
    parser.add_argument("--config", help="pipeline config YAML (default: $ROTASCAN_CONFIG)")
    parser.add_argument("--seed", type=int, help="global seed, overrides the config")
    parser.add_argument("--output-dir", help="output directory, overrides the config")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    subparsers.required = True
    for group in groups:
        group.register(subparsers)
    return parser


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; 0 on success, 2 on usage errors, 1 on any other failure"""
    try:
        parser = build_parser(load_command_groups())
        args = parser.parse_args(argv)
        configure_logging(args.log_level)
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.output_dir:
            config = replace(config, output_dir=args.output_dir)
        ctx = CommandContext(config=config, seed=config.seed, output_dir=Path(config.output_dir))
        logger.info(f"🔄 rotascan {args.command} (seed {ctx.seed}, output {ctx.output_dir})")
        return args.handler(args, ctx)
    except UsageError as e:
        print(e.one_line(), file=sys.stderr)
        return 2
    except RotascanError as e:
        logger.debug("command failed", exc_info=True)
        print(e.one_line(), file=sys.stderr)
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    except Exception as e:
        logger.error(f"❌ Unexpected failure: {e}", exc_info=True)
        print(RotascanError(str(e), code="internal").one_line(), file=sys.stderr)
        return 1


def main() -> None:
    load_dotenv()
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
