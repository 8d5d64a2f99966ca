"""Repository for memoized backend responses."""
from typing import Optional

from sqlalchemy import func, select

from database.models.cache_entry import CacheEntry
from database.repositories.base import BaseRepository


class CacheEntryRepository(BaseRepository[CacheEntry]):
    """Cache entries keyed by content hash."""

    model_class = CacheEntry

    async def get_value(self, key: str) -> Optional[str]:
        """
        Get the stored JSON value for a key.

        Args:
            key: Content hash

        Returns:
            Stored JSON text or None on a miss
        """
        entry = await self.get(key)
        return entry.value if entry is not None else None

    async def put(self, key: str, model_id: str, operation: str, value: str) -> CacheEntry:
        """
        Store a value, replacing an existing (corrupted) entry with the same key.

        Args:
            key: Content hash
            model_id: Backend model identifier
            operation: Backend operation name
            value: JSON text

        Returns:
            The stored entry
        """
        entry = await self.session.merge(
            CacheEntry(key=key, model_id=model_id, operation=operation, value=value)
        )
        await self.session.flush()
        return entry

    async def count_by_operation(self) -> dict[str, int]:
        """Number of entries per operation."""
        result = await self.session.execute(
            select(CacheEntry.operation, func.count()).group_by(CacheEntry.operation)
        )
        return {operation: count for operation, count in result.all()}
