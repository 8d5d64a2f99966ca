"""`discover` and `search` commands."""
from argparse import Namespace

from cli.handlers.common import add_run_arguments, open_run
from cli.utils.formatters import format_attributes, format_trace
from services.discovery import attributes_document
from services.use_cases import DiscoverUseCase, LoadRecordsUseCase, SearchAttributeUseCase


async def handle_discover(args: Namespace, data: dict) -> int:
    async with open_run(args) as context:
        records = await LoadRecordsUseCase(context).execute(args.prompts)
        attributes, _ = await DiscoverUseCase(context).execute(records, swap=args.swap, sweep_out=args.sweep_out)
    print(format_attributes(attributes_document(attributes)))
    return 0


async def handle_search(args: Namespace, data: dict) -> int:
    async with open_run(args) as context:
        if args.mode:
            context.config.search.mode = args.mode
        records = await LoadRecordsUseCase(context).execute(args.prompts)
        outcome = await SearchAttributeUseCase(context).execute(args.attribute, records)
    print(format_trace(outcome.trace))
    return 0


def register(subparsers) -> None:
    discover = subparsers.add_parser("discover", help="Rank attributes model A shows more than model B")
    add_run_arguments(discover)
    discover.add_argument("--prompts", help="Prompt JSONL, overrides paths.prompts")
    discover.add_argument("--swap", action="store_true", help="Discover in the B-over-A direction")
    discover.add_argument("--sweep-out", help="Write mean divergence over a (t, delta) grid here")
    discover.set_defaults(handler=handle_discover)

    search = subparsers.add_parser("search", help="Search the prompt description of one attribute")
    add_run_arguments(search)
    search.add_argument("--attribute", required=True)
    search.add_argument("--prompts", help="Prompt JSONL, overrides paths.prompts")
    search.add_argument("--mode", choices=["generate", "retrieve"])
    search.set_defaults(handler=handle_search)
