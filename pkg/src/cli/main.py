"""
anisoheat command line - subcommands kernel, solve, simulate, verify, multiplier and render
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.cli.config import SuiteKind, TaskKind
from src.cli.io import report_render
from src.cli.models import ErrorResponse
from src.cli.tasks import run
from src.common import __version__
from src.common.errors import AnisoheatError, ConfigError
from src.common.settings import load_settings

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisoheat",
        description="Anisotropic nonlocal heat equations: kernels, solvers, paths and estimate checks",
    )
    parser.add_argument("--version", action="version", version=f"anisoheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for task in TaskKind:
        cmd = sub.add_parser(task.value, help=f"Run a {task.value} config")
        cmd.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        cmd.add_argument("--out", required=True, type=Path, help="Output directory")
        cmd.add_argument("--seed", type=int, default=None, help="Override the config's master seed")
        cmd.add_argument("--workers", type=int, default=None,
                         help="Worker threads (default: ANISOHEAT_WORKERS, else CPU count)")
        cmd.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default: ANISOHEAT_LOG_LEVEL)")
        cmd.add_argument("--progress", action="store_true", default=None, help="Show progress bars")
        if task == TaskKind.verify:
            cmd.add_argument("--suite", action="append", choices=[s.value for s in SuiteKind], default=None,
                             help="Suite to run (repeatable; default: the config's suites)")

    render = sub.add_parser("render", help="Merge *_report.json files into summary.csv and digest.txt")
    render.add_argument("--out", required=True, type=Path, help="Directory holding the reports")
    render.add_argument("--log-level", default=None)
    return parser


def _error(e: Exception) -> None:
    details = e.details if isinstance(e, AnisoheatError) else None
    message = e.message if isinstance(e, AnisoheatError) else str(e)
    response = ErrorResponse(error=type(e).__name__, message=message, details=details or None)
    print(json.dumps(response.model_dump(mode="json"), default=str), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run, and map the outcome to an exit code

    Returns:
        0 pass, 1 suite failure, 2 config error, 3 runtime error
    """
    args = build_parser().parse_args(argv)
    settings = load_settings(workers=getattr(args, "workers", None), log_level=args.log_level,
                             progress=getattr(args, "progress", None))
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        if args.command == "render":
            _, passed = report_render(args.out)
        else:
            manifest = run(args.config, args.out, settings, task=TaskKind(args.command), seed=args.seed,
                           suites=getattr(args, "suite", None))
            passed = manifest.passed
    except ConfigError as e:
        logger.error("Config error: %s", e.message)
        _error(e)
        return EXIT_CONFIG
    except AnisoheatError as e:
        logger.error("Run failed: %s", e.message)
        _error(e)
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception("Unexpected error")
        _error(e)
        return EXIT_RUNTIME
    return EXIT_PASS if passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
