"""
Main entry point for the repdiff command line.

1. Parses arguments
2. Sets up logging
3. Wraps the chosen handler in the error and logging middlewares
4. Runs it and exits with its code
"""
import argparse
import asyncio
import logging
import sys
from typing import Optional, Sequence

from cli.config import settings
from cli.handlers import register_all
from cli.logging_config import setup_logging
from cli.middlewares import ErrorHandlerMiddleware, LoggingMiddleware, wrap

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repdiff",
        description="Find visual attributes one text-to-image model renders and another does not, "
        "and the prompts that trigger them.",
    )
    parser.add_argument("--log-level", default=None, help=f"Console log level (default {settings.log_level})")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug output on the console")
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_all(subparsers)
    return parser


def command_name(args: argparse.Namespace) -> str:
    parts = [args.command]
    for attr in ("sim_command", "dataset_command"):
        if getattr(args, attr, None):
            parts.append(getattr(args, attr))
    return " ".join(parts)


async def dispatch(args: argparse.Namespace) -> int:
    handler = wrap(args.handler, [ErrorHandlerMiddleware(), LoggingMiddleware()])
    return await handler(args, {"command": command_name(args)})


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level, verbose=args.verbose)
    try:
        return asyncio.run(dispatch(args))
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
