"""Helpers shared by command handlers."""
from argparse import ArgumentParser, Namespace
from contextlib import asynccontextmanager
from typing import AsyncIterator

from cli.config import database_url_for, load_run_config
from core.dto.config import RunConfig
from services.context import RunContext, open_context


def add_run_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", help="Run configuration JSON (defaults to a sim run)")
    parser.add_argument("--out", help="Output directory, overrides paths.out")


def load_config(args: Namespace) -> RunConfig:
    config = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "out", None):
        config.paths.out = args.out
    return config


@asynccontextmanager
async def open_run(args: Namespace) -> AsyncIterator[RunContext]:
    config = load_config(args)
    async with open_context(config, database_url_for(config)) as context:
        yield context
