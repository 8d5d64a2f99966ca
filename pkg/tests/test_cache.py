"""Tests for the response cache and its repository."""
import asyncio

import pytest

from core.dto.config import DiscoveryConfig, Thresholds
from database.repositories.cache import CacheEntryRepository
from services.backends import build_sim_suite
from services.cache import CacheStore, canonical_json, make_key
from services.discovery import discover
from services.journal import CALL, RunJournal
from services.records import build_records
from services.sim.world import sim_prompts


class Counter:
    def __init__(self, value="computed"):
        self.calls = 0
        self.value = value

    async def __call__(self):
        self.calls += 1
        await asyncio.sleep(0)
        return self.value


def test_make_key_canonicalizes_input():
    """Test whitespace runs and key order do not change the key."""
    assert make_key("m", "chat", {"text": "a  red\ncar", "n": 1}) == make_key("m", "chat", {"n": 1, "text": "a red car"})
    assert make_key("m", "chat", {"text": "a"}) != make_key("other", "chat", {"text": "a"})
    assert make_key("m", "chat", {"text": "a"}) != make_key("m", "embed_text", {"text": "a"})
    assert canonical_json({"b": [" x  y "], "a": 1}) == '{"a":1,"b":["x y"]}'


async def test_concurrent_callers_compute_once():
    """Test one computation per key under concurrent callers."""
    cache = CacheStore()
    compute = Counter()

    results = await asyncio.gather(*(
        cache.get_or_compute("k", compute, model_id="m", operation="chat") for _ in range(20)
    ))

    assert compute.calls == 1
    assert results == ["computed"] * 20
    assert cache.stats() == {"hits": 19, "misses": 1, "recomputed": 0}


async def test_entries_persist_in_database(database):
    """Test a second store over the same database reuses entries."""
    first = CacheStore(database)
    await first.get_or_compute("k", Counter({"v": [1, 2]}), model_id="m", operation="embed_text")

    compute = Counter()
    second = CacheStore(database)
    value = await second.get_or_compute("k", compute, model_id="m", operation="embed_text")

    assert value == {"v": [1, 2]}
    assert compute.calls == 0
    assert await second.entry_counts() == {"embed_text": 1}


async def test_unreadable_entry_is_recomputed(database):
    """Test an entry that is not JSON is replaced."""
    async with database.session() as session:
        await CacheEntryRepository(session).put("k", "m", "chat", "{broken")

    cache = CacheStore(database)
    compute = Counter("fresh")
    value = await cache.get_or_compute("k", compute, model_id="m", operation="chat")

    assert value == "fresh"
    assert compute.calls == 1
    assert cache.recomputed == 1
    async with database.session() as session:
        assert await CacheEntryRepository(session).get_value("k") == '"fresh"'


async def test_undecodable_entry_is_recomputed():
    """Test an entry the caller cannot decode is recomputed."""
    cache = CacheStore()
    await cache.get_or_compute("k", Counter({"wrong": 1}), model_id="m", operation="synthesize")

    compute = Counter({"handle": {"id": "x"}})
    value = await cache.get_or_compute(
        "k", compute, model_id="m", operation="synthesize", decode=lambda v: v["handle"]["id"]
    )

    assert value == "x"
    assert compute.calls == 1
    assert cache.recomputed == 1


async def test_misses_are_journaled_and_warm_a_new_cache():
    """Test call events rebuild a cache without recomputing."""
    journal = RunJournal()
    first = CacheStore(journal=journal)
    await first.get_or_compute("k", Counter("v"), model_id="m", operation="chat", request={"q": 1})
    await first.get_or_compute("k", Counter("v"), model_id="m", operation="chat", request={"q": 1})

    (event,) = journal.events(CALL)
    assert event["request"] == {"q": 1}
    assert event["response"] == "v"

    second = CacheStore()
    assert await second.warm_from_journal(journal) == 1
    compute = Counter()
    assert await second.get_or_compute("k", compute, model_id="m", operation="chat") == "v"
    assert compute.calls == 0


async def test_fresh_file_journal_records_every_miss(tmp_path, world):
    """Test a new journal file records each backend miss exactly once, without a run event first."""
    path = tmp_path / "journal.jsonl"
    cache = CacheStore(journal=RunJournal(path))
    for i in range(3):
        await cache.get_or_compute(f"k{i}", Counter(i), model_id="m", operation="chat")
    await cache.get_or_compute("k0", Counter(), model_id="m", operation="chat")

    assert [e["key"] for e in RunJournal(path).events(CALL)] == ["k0", "k1", "k2"]

    suite = build_sim_suite(world, cache)
    records, _ = await build_records(sim_prompts(world, 20, 0), suite, 2)
    await discover(records, suite, Thresholds(), DiscoveryConfig(batch_size=10))

    replayed = RunJournal(path).events(CALL)
    assert len(replayed) == cache.misses
    assert len({e["key"] for e in replayed}) == len(replayed)


async def test_key_locks_are_released():
    """Test per-key locks are dropped once no caller waits on them."""
    cache = CacheStore()

    await asyncio.gather(*(
        cache.get_or_compute(f"k{i % 5}", Counter(), model_id="m", operation="chat") for i in range(50)
    ))

    assert cache._locks == {}
    assert cache._waiters == {}


async def test_frozen_cache_replays_without_backend_calls(world):
    """Test a repeated discovery over a warm cache makes no backend call."""
    cache = CacheStore()

    async def run():
        suite = build_sim_suite(world, cache)
        records, _ = await build_records(sim_prompts(world, 100, seed=0), suite, 3)
        attributes, _ = await discover(records, suite, Thresholds(), DiscoveryConfig())
        return suite, [a.to_dict() for a in attributes]

    first_suite, first = await run()
    second_suite, second = await run()

    assert first_suite.total_calls() > 0
    assert second_suite.total_calls() == 0
    assert first == second


async def test_backend_parallelism_is_bounded(world):
    """Test in-flight calls never exceed max_parallel."""
    suite = build_sim_suite(world, CacheStore(), max_parallel=2)

    await build_records(sim_prompts(world, 20, seed=0), suite, 3)

    assert 1 <= suite.image("A").peak_in_flight <= 2
    assert suite.embedding.peak_in_flight <= 2


async def test_repository_counts_by_operation(database):
    """Test entries are counted per operation and replaced on put."""
    async with database.session() as session:
        repo = CacheEntryRepository(session)
        await repo.put("a", "m", "chat", '"x"')
        await repo.put("b", "m", "chat", '"y"')
        await repo.put("c", "m", "embed_text", "[1.0]")
        await repo.put("a", "m", "chat", '"z"')

    async with database.session() as session:
        repo = CacheEntryRepository(session)
        assert await repo.count_by_operation() == {"chat": 2, "embed_text": 1}
        assert await repo.get_value("a") == '"z"'
        assert await repo.get_value("missing") is None


@pytest.mark.parametrize("operation", ["chat", "describe", "synthesize"])
async def test_entry_counts_in_memory(operation):
    """Test in-memory stores count entries by operation."""
    cache = CacheStore()
    await cache.get_or_compute("k1", Counter(), model_id="m", operation=operation)
    await cache.get_or_compute("k2", Counter(), model_id="m", operation=operation)

    assert await cache.entry_counts() == {operation: 2}
