import os
import sys
from typing import Any, AsyncGenerator, Callable, Optional

import pytest
import pytest_asyncio

# Ensure project root is on sys.path so `import services` works
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from core.dto.config import BackendConfig, Thresholds
from core.types import PromptRecord
from database.base import Database
from services.backends import BackendSuite, build_sim_suite
from services.backends.base import Message, TextBackend
from services.cache import CacheStore
from services.records import build_records
from services.sim.world import SimWorld, make_world, sim_prompts

TEST_DATABASE_URL = "sqlite+aiosqlite:///:memory:"


class ScriptedTextBackend(TextBackend):
    """Text backend answering from a list of canned responses, or a function of the request."""

    def __init__(self, responses: list[str] | Callable[[str, dict[str, Any]], str], cache: Optional[CacheStore] = None):
        super().__init__(BackendConfig(model_id="scripted", retry_limit=0), cache)
        self.responses = responses
        self.requests: list[tuple[str, list[Message]]] = []

    async def _complete(self, messages, temperature, purpose, context) -> str:
        self.requests.append((purpose, list(messages)))
        if callable(self.responses):
            return self.responses(purpose, context)
        return self.responses.pop(0)


@pytest.fixture
def world() -> SimWorld:
    """Default sim world: 200 tokens, 3 concepts."""
    return make_world(200, 3, seed=7)


@pytest.fixture
def suite(world: SimWorld) -> BackendSuite:
    """Sim backends sharing an in-memory cache."""
    return build_sim_suite(world, CacheStore())


@pytest.fixture
def thresholds() -> Thresholds:
    return Thresholds()


@pytest_asyncio.fixture
async def records(world: SimWorld, suite: BackendSuite) -> list[PromptRecord]:
    """300 initial prompts with 3 images per model."""
    built, refused = await build_records(sim_prompts(world, 300, seed=0), suite, 3)
    assert not refused
    return built


@pytest_asyncio.fixture(scope="function")
async def database() -> AsyncGenerator[Database, None]:
    """In-memory cache database with all tables created."""
    db = Database(TEST_DATABASE_URL)
    await db.init_db()
    yield db
    await db.close()


@pytest.fixture
def scripted():
    """Factory for scripted text backends."""
    return ScriptedTextBackend
