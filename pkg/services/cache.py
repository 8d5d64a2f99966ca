"""Content-addressed cache of backend responses with at-most-once computation."""
import asyncio
import json
import logging
from typing import Any, Awaitable, Callable, Optional, TypeVar

from sqlalchemy.exc import SQLAlchemyError

from core.exceptions import StorageError
from core.types import content_hash
from database.base import Database
from database.repositories.cache import CacheEntryRepository
from services.journal import CALL, RunJournal

logger = logging.getLogger(__name__)

T = TypeVar("T")

_MISSING = object()


def canonicalize(value: Any) -> Any:
    """Collapse whitespace inside strings, recursively."""
    if isinstance(value, str):
        return " ".join(value.split())
    if isinstance(value, dict):
        return {str(k): canonicalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonicalize(v) for v in value]
    return value


def canonical_json(value: Any) -> str:
    """Sorted-key compact JSON of the canonicalized value."""
    return json.dumps(canonicalize(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def make_key(model_id: str, operation: str, payload: Any) -> str:
    """256-bit cache key of (model id, operation, canonical input)."""
    return content_hash(model_id, operation, canonical_json(payload))


class CacheStore:
    """
    Memoizes backend responses by content hash.

    Values are JSON documents. Entries live in memory and, when a database is
    given, are persisted through CacheEntryRepository before being returned.
    A per-key lock guarantees one computation per key under concurrent callers;
    writes to the database go through a single writer lock.
    """

    def __init__(self, database: Optional[Database] = None, journal: Optional[RunJournal] = None):
        self.database = database
        self.journal = journal
        self._memory: dict[str, str] = {}
        self._operations: dict[str, str] = {}
        self._locks: dict[str, asyncio.Lock] = {}
        self._waiters: dict[str, int] = {}
        self._write_lock = asyncio.Lock()
        self.hits = 0
        self.misses = 0
        self.recomputed = 0

    async def get_or_compute(
        self,
        key: str,
        compute: Callable[[], Awaitable[Any]],
        *,
        model_id: str,
        operation: str,
        decode: Callable[[Any], T] = lambda v: v,
        request: Any = None,
    ) -> T:
        """
        Return the cached value for key, computing and persisting it on a miss.

        Args:
            key: Content hash from make_key
            compute: Coroutine factory producing a JSON-serializable value
            model_id: Backend model identifier (stored with the entry)
            operation: Backend operation name (stored with the entry)
            decode: Converts the stored JSON into the caller's type; a failure
                marks the entry as corrupted and triggers a recompute
            request: Request payload written to the journal on a miss

        Returns:
            Decoded value

        Raises:
            StorageError: If the entry cannot be persisted
        """
        lock = self._locks.setdefault(key, asyncio.Lock())
        self._waiters[key] = self._waiters.get(key, 0) + 1
        try:
            async with lock:
                return await self._get_or_compute(key, compute, model_id, operation, decode, request)
        finally:
            self._waiters[key] -= 1
            if not self._waiters[key]:
                # last caller for this key
                del self._waiters[key]
                del self._locks[key]

    async def _get_or_compute(
        self,
        key: str,
        compute: Callable[[], Awaitable[Any]],
        model_id: str,
        operation: str,
        decode: Callable[[Any], T],
        request: Any,
    ) -> T:
        stored = await self._load(key)
        if stored is not _MISSING:
            try:
                result = decode(stored)
                self.hits += 1
                return result
            except (KeyError, TypeError, ValueError, IndexError) as e:
                logger.warning(
                    f"Corrupted cache entry {key[:12]} ({operation}): {e}; recomputing",
                    extra={"operation": operation},
                )
                self.recomputed += 1

        self.misses += 1
        value = await compute()
        text = json.dumps(value, sort_keys=True, ensure_ascii=False)
        await self._store(key, model_id, operation, text)
        if self.journal is not None:
            await self.journal.append(
                CALL, key=key, model_id=model_id, operation=operation, request=request, response=value
            )
        return decode(json.loads(text))

    async def _load(self, key: str) -> Any:
        text = self._memory.get(key)
        if text is None and self.database is not None:
            try:
                async with self.database.session() as session:
                    text = await CacheEntryRepository(session).get_value(key)
            except SQLAlchemyError as e:
                raise StorageError(f"Cache read failed: {e}")
            if text is not None:
                self._memory[key] = text
        if text is None:
            return _MISSING
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            logger.warning(f"Unreadable cache entry {key[:12]}; recomputing")
            self.recomputed += 1
            return _MISSING

    async def _store(self, key: str, model_id: str, operation: str, text: str) -> None:
        if self.database is not None:
            try:
                async with self._write_lock:
                    async with self.database.session() as session:
                        await CacheEntryRepository(session).put(key, model_id, operation, text)
            except SQLAlchemyError as e:
                raise StorageError(f"Cache write failed: {e}")
        self._memory[key] = text
        self._operations[key] = operation

    async def warm_from_journal(self, journal: RunJournal) -> int:
        """
        Rebuild cache entries from the call events of a journal.

        Returns:
            Number of entries added
        """
        added = 0
        for event in journal.events(CALL):
            key = event["key"]
            if await self._load(key) is not _MISSING:
                continue
            text = json.dumps(event["response"], sort_keys=True, ensure_ascii=False)
            await self._store(key, event["model_id"], event["operation"], text)
            added += 1
        logger.info(f"Warmed cache with {added} entries from journal")
        return added

    async def entry_counts(self) -> dict[str, int]:
        """Entries per operation; deterministic for a given set of computed keys."""
        if self.database is not None:
            try:
                async with self.database.session() as session:
                    return await CacheEntryRepository(session).count_by_operation()
            except SQLAlchemyError as e:
                raise StorageError(f"Cache stats failed: {e}")
        counts: dict[str, int] = {}
        for operation in self._operations.values():
            counts[operation] = counts.get(operation, 0) + 1
        return counts

    def stats(self) -> dict[str, int]:
        return {"hits": self.hits, "misses": self.misses, "recomputed": self.recomputed}
