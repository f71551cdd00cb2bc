#!/usr/bin/env python3
"""
Command-line entry point for switchstab.

Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 precondition refused.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

sys.path.append(str(Path(__file__).parent.parent))

from models.config_models import OutputFormat
from src import __version__
from src.config.config_manager import ConfigManager
from src.errors import InputError, SwitchingError

EXIT_OK = 0
EXIT_BAD_INPUT = 2

COMMANDS = {
    "check-solvable": ("check_solvable", "Derived series, solvability and triangularization diagnostics"),
    "triangularize": ("triangularize", "Simultaneous triangularization of a solvable family"),
    "exponents": ("exponents", "QR Lyapunov, Birkhoff and Liao-type exponents"),
    "mc": ("mc", "Monte-Carlo almost-sure stability and the mean-system dichotomy"),
    "sweep": ("sweep", "Robustness sweep over perturbation magnitudes"),
    "control-sweep": ("control_sweep", "Control-product sweep over input bounds"),
}


def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """Setup consistent logging format"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--scenario', required=True, help='Scenario file or built-in scenario name')
    common.add_argument('--seed', type=int, help='Master seed (overrides the scenario)')
    common.add_argument('--threads', type=int, help='Worker threads (default: all cores)')
    common.add_argument('--out', type=str, help='Report directory')
    common.add_argument('--format', choices=[f.value for f in OutputFormat], help='Report format')
    common.add_argument('--horizon', type=float, help='Horizon T (overrides the scenario)')
    common.add_argument('--trials', type=int, help='Sampled signals (overrides the scenario)')
    common.add_argument('--config', type=str, help='Analysis configuration file')
    common.add_argument('--log-level', type=str, help='Logging level (default from configuration)')
    common.add_argument('--log-file', type=str, help='Also write the log to this file')

    parser = argparse.ArgumentParser(
        prog='switchstab',
        description='Stability analysis of randomly switched linear and quasilinear systems',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config_manager = ConfigManager(args.config)
    except SwitchingError as e:
        setup_logging(args.log_level or "INFO", args.log_file)
        logging.getLogger("switchstab").error(str(e))
        return e.exit_code

    setup_logging(args.log_level or config_manager.get_config().log_level, args.log_file)
    logger = logging.getLogger("switchstab")

    # Import here so logging is configured before the analysis modules log
    from cli.app import App

    if args.seed is not None and args.seed < 0:
        logger.error("--seed must be non-negative")
        return EXIT_BAD_INPUT
    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be >= 1")
        return EXIT_BAD_INPUT

    app = App(
        config_manager=config_manager,
        seed=args.seed,
        threads=args.threads,
        out_dir=args.out,
        fmt=OutputFormat(args.format) if args.format else None,
        horizon=args.horizon,
        trials=args.trials,
    )
    handler = getattr(app, COMMANDS[args.command][0])

    try:
        return handler(args.scenario)
    except InputError as e:
        logger.error(f"Bad input: {e}")
        return e.exit_code
    except SwitchingError as e:
        logger.error(f"{e.__class__.__name__}: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
        return e.exit_code
    except ValueError as e:
        logger.error(f"Bad input: {e}")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
