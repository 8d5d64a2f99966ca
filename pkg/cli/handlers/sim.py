"""`sim` commands: build a world, draw prompts from it."""
from argparse import Namespace

from core.dto.config import SimConfig
from services.records import write_prompts
from services.sim import SimWorld, make_world, sim_prompts


async def handle_make_world(args: Namespace, data: dict) -> int:
    world = make_world(
        args.vocab,
        args.concepts,
        args.seed,
        error_rate=args.error_rate,
        noise=args.noise,
        description_error_rate=args.description_error_rate,
    )
    world.save(args.out)
    print(f"World {world.fingerprint()}: attribute '{world.attribute_token}' <- {', '.join(world.concepts)}")
    return 0


async def handle_prompts(args: Namespace, data: dict) -> int:
    world = SimWorld.load(args.world)
    prompts = sim_prompts(world, args.n, args.seed)
    write_prompts(args.out, prompts)
    print(f"Wrote {len(prompts)} prompts to {args.out}")
    return 0


def register(subparsers) -> None:
    defaults = SimConfig()
    parser = subparsers.add_parser("sim", help="Offline simulator worlds")
    commands = parser.add_subparsers(dest="sim_command", required=True)

    make = commands.add_parser("make-world", help="Create a world with one planted representation")
    make.add_argument("--vocab", type=int, default=defaults.vocab)
    make.add_argument("--concepts", type=int, default=defaults.concepts)
    make.add_argument("--seed", type=int, default=defaults.world_seed)
    make.add_argument("--error-rate", type=float, default=0.0, help="Attribute proposal error rate")
    make.add_argument("--description-error-rate", type=float, default=0.0)
    make.add_argument("--noise", type=float, default=0.0, help="Image embedding jitter")
    make.add_argument("--out", required=True)
    make.set_defaults(handler=handle_make_world)

    prompts = commands.add_parser("prompts", help="Draw an initial prompt file from a world")
    prompts.add_argument("--world", required=True)
    prompts.add_argument("--n", type=int, default=defaults.n_prompts)
    prompts.add_argument("--seed", type=int, default=defaults.prompts_seed)
    prompts.add_argument("--out", required=True)
    prompts.set_defaults(handler=handle_prompts)
