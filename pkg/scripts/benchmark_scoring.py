"""Timing of the vectorized divergence scorer against the scalar rule."""
import os
import sys
import time

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.dto.config import Thresholds
from services.divergence import rank_attributes, z_batch, z_from_similarity
from services.backends.sim import build_sim_suite
from services.discovery import embed_attributes
from services.records import build_records
from services.sim import make_world, sim_prompts


def time_z(n: int = 1_000_000, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    s_a = rng.uniform(-1, 1, n)
    s_b = rng.uniform(-1, 1, n)
    th = Thresholds(t=0.1, delta=0.05)

    start = time.perf_counter()
    vectorized = z_batch(s_a, s_b, th.t, th.delta)
    elapsed_vec = time.perf_counter() - start

    sample = min(n, 100_000)
    start = time.perf_counter()
    scalar = [z_from_similarity(float(a), float(b), th) for a, b in zip(s_a[:sample], s_b[:sample])]
    elapsed_scalar = time.perf_counter() - start

    mismatches = int(np.sum(vectorized[:sample] != np.asarray(scalar)))
    print(f"z over {n:,} pairs: {elapsed_vec * 1000:.1f} ms vectorized")
    print(f"z over {sample:,} pairs: {elapsed_scalar * 1000:.1f} ms scalar, {mismatches} mismatches")


async def time_ranking(n_prompts: int = 300, n_attributes: int = 200) -> None:
    world = make_world(200, 3, 7)
    suite = build_sim_suite(world)
    records, _ = await build_records(sim_prompts(world, n_prompts), suite, 3)
    attributes = await embed_attributes(world.vocab[:n_attributes], suite.embedding)

    start = time.perf_counter()
    ranked = rank_attributes(attributes, records, Thresholds())
    elapsed = time.perf_counter() - start
    print(f"Ranked {len(ranked)} attributes over {len(records)} prompts in {elapsed * 1000:.1f} ms")
    print(f"Top attribute '{ranked[0].text}' ({ranked[0].mean_divergence:.3f}), planted '{world.attribute_token}'")


if __name__ == "__main__":
    import asyncio

    time_z()
    asyncio.run(time_ranking())
