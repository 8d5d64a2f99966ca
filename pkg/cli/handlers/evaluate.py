"""`eval` command."""
import json
from argparse import Namespace
from pathlib import Path

from cli.handlers.common import add_run_arguments, open_run
from cli.utils.formatters import format_eval_report
from core.exceptions import ConfigError
from services.dataset import load_bundle, load_representations
from services.evaluation import kappa_report, load_predictions, write_eval_report
from services.use_cases import EvaluateUseCase


def read_ratings(path: str) -> tuple[list[int], list[int]]:
    """Two raters' 1-3 ratings from {"x": [...], "y": [...]}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return list(data["x"]), list(data["y"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise ConfigError(f"Cannot read ratings from {path}: {e}")


async def handle_eval(args: Namespace, data: dict) -> int:
    if args.pred and not args.truth:
        raise ConfigError("--pred needs --truth")
    predictions = load_predictions(args.pred) if args.pred else None
    if args.truth:
        truths = load_representations(args.truth)
    else:
        truths = [load_bundle(d).spec for d in args.bundles]

    async with open_run(args) as context:
        report = await EvaluateUseCase(context).execute(truths, predictions, args.bundles)

    kappa = kappa_report(*read_ratings(args.ratings)) if args.ratings else None
    target = write_eval_report(report, args.report, kappa)
    print(format_eval_report(report.model_copy(update={"kappa": kappa or {}})))
    print(f"\nWritten to {target}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Judge predictions against ground-truth representations")
    add_run_arguments(parser)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--pred", help="Predictions JSON")
    source.add_argument("--bundles", nargs="+", default=[], help="Bundle directories to run and judge")
    parser.add_argument("--truth", help="Representation list JSON (required with --pred)")
    parser.add_argument("--ratings", help="Two raters' ratings for weighted kappa")
    parser.add_argument("--report", default="eval_report.json", help="Where to write the evaluation report")
    parser.set_defaults(handler=handle_eval)
