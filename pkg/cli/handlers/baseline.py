"""`baseline` command."""
from argparse import Namespace

from cli.handlers.common import add_run_arguments, open_run
from cli.utils.formatters import format_attributes
from services.use_cases import BaselineUseCase, LoadRecordsUseCase


async def handle_baseline(args: Namespace, data: dict) -> int:
    async with open_run(args) as context:
        records = await LoadRecordsUseCase(context).execute(args.prompts)
        rows = await BaselineUseCase(context).execute(args.method, records)
    print(format_attributes(rows))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("baseline", help="Run a comparison method")
    add_run_arguments(parser)
    parser.add_argument("--method", choices=["tfidf", "llm-only", "visdiff"], required=True)
    parser.add_argument("--prompts", help="Prompt JSONL, overrides paths.prompts")
    parser.set_defaults(handler=handle_baseline)
