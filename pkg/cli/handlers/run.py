"""`run` and `report` commands."""
from argparse import Namespace

from cli.handlers.common import add_run_arguments, open_run
from cli.utils.formatters import format_run_report, render_file
from services.use_cases import RunPipelineUseCase


async def handle_run(args: Namespace, data: dict) -> int:
    async with open_run(args) as context:
        report = await RunPipelineUseCase(context).execute()
    print(format_run_report(report))
    return 0


async def handle_report(args: Namespace, data: dict) -> int:
    print(render_file(args.path))
    return 0


def register(subparsers) -> None:
    run = subparsers.add_parser("run", help="Discover attributes and search their descriptions")
    add_run_arguments(run)
    run.set_defaults(handler=handle_run)

    report = subparsers.add_parser("report", help="Render a report, evaluation report or trace as text")
    report.add_argument("path")
    report.set_defaults(handler=handle_report)
