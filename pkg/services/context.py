"""Everything a command needs for one run: storage, backends and, in sim mode, the world."""
import logging
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import AsyncIterator, Optional

from core.dto.config import RunConfig, SimConfig
from database.base import Database
from services.backends import BackendSuite, build_http_suite, build_sim_suite
from services.blobs import BlobStore
from services.cache import CacheStore
from services.journal import RunJournal
from services.sim.world import SimWorld, make_world

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    config: RunConfig
    database: Database
    cache: CacheStore
    journal: RunJournal
    blobs: BlobStore
    suite: BackendSuite
    world: Optional[SimWorld] = None

    @property
    def out_dir(self) -> Path:
        return Path(self.config.paths.out)


def world_from_config(sim: SimConfig) -> SimWorld:
    """The configured world file, or a world generated from the inline parameters."""
    if sim.world_path:
        return SimWorld.load(sim.world_path)
    return make_world(
        sim.vocab,
        sim.concepts,
        sim.world_seed,
        error_rate=sim.error_rate,
        noise=sim.noise,
        description_error_rate=sim.description_error_rate,
    )


@asynccontextmanager
async def open_context(
    config: RunConfig,
    database_url: str,
    journal_path: Optional[str | Path] = None,
) -> AsyncIterator[RunContext]:
    """
    Open the cache database, journal, blob store and backends; close them on exit.

    The cache is warmed from the journal so a copied journal alone is enough
    to replay a run.
    """
    database = Database(database_url)
    await database.migrate()
    journal = RunJournal(journal_path if journal_path is not None else config.paths.journal)
    cache = CacheStore(database, journal)
    blobs = BlobStore(config.paths.blob_dir)
    await cache.warm_from_journal(journal)

    world: Optional[SimWorld] = None
    if config.mode == "sim":
        world = world_from_config(config.sim)
        suite = build_sim_suite(world, cache)
        logger.info(f"Sim mode, world {world.fingerprint()}")
    else:
        suite = build_http_suite(config.backends, blobs, cache)
        logger.info(f"Live mode, models {', '.join(config.model_ids())}")

    context = RunContext(config, database, cache, journal, blobs, suite, world)
    try:
        yield context
    finally:
        logger.info(f"Cache {cache.stats()}, backend calls {suite.total_calls()}")
        await suite.close()
        await database.close()
