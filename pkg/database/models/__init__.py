"""Database models package."""
from database.models.cache_entry import CacheEntry

__all__ = [
    "CacheEntry",
]
