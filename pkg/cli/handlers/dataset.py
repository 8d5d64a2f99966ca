"""`dataset` commands: generate, validate, templated prompts."""
from argparse import Namespace

from cli.handlers.common import add_run_arguments, open_run
from cli.utils.formatters import format_validation
from services.dataset import load_representations, templated_prompts
from services.records import write_prompts
from services.use_cases import GenerateBundlesUseCase, ValidateBundleUseCase


async def handle_gen(args: Namespace, data: dict) -> int:
    specs = load_representations(args.reps) if args.reps else []
    if args.limit:
        specs = specs[: args.limit]
    async with open_run(args) as context:
        written = await GenerateBundlesUseCase(context).execute(specs, args.dir)
    for path in written:
        print(path)
    return 0


async def handle_validate(args: Namespace, data: dict) -> int:
    async with open_run(args) as context:
        result = await ValidateBundleUseCase(context).execute(args.dir)
    print(format_validation(args.dir, result))
    return 0 if result.accepted else 1


async def handle_templated(args: Namespace, data: dict) -> int:
    prompts = templated_prompts()
    write_prompts(args.out, prompts)
    print(f"Wrote {len(prompts)} templated prompts to {args.out}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("dataset", help="Benchmark bundles with planted divergences")
    commands = parser.add_subparsers(dest="dataset_command", required=True)

    gen = commands.add_parser("gen", help="Generate one bundle per representation")
    add_run_arguments(gen)
    gen.add_argument("--reps", help="Representation list JSON; sim mode defaults to the world's planted one")
    gen.add_argument("--limit", type=int, help="Only the first N representations")
    gen.add_argument("--dir", required=True, help="Directory receiving the bundles")
    gen.set_defaults(handler=handle_gen)

    validate = commands.add_parser("validate", help="Re-check a bundle and measure its separability")
    add_run_arguments(validate)
    validate.add_argument("--dir", required=True)
    validate.set_defaults(handler=handle_validate)

    templated = commands.add_parser("templated", help="Write the style x adjective x subject prompt bank")
    templated.add_argument("--out", required=True)
    templated.set_defaults(handler=handle_templated)
