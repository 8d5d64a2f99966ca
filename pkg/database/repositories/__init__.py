"""Repository classes."""
from database.repositories.base import BaseRepository
from database.repositories.cache import CacheEntryRepository

__all__ = [
    "BaseRepository",
    "CacheEntryRepository",
]
