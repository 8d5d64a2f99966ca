"""Command handlers; each module registers its subcommands."""
from cli.handlers import baseline, dataset, discover, evaluate, run, sim

COMMAND_MODULES = [sim, discover, baseline, dataset, evaluate, run]


def register_all(subparsers) -> None:
    for module in COMMAND_MODULES:
        module.register(subparsers)


__all__ = [
    "COMMAND_MODULES",
    "register_all",
]
