"""Database package initialization."""
from database.base import Base, Database, DBSession, build_engine
from database.models import CacheEntry

__all__ = [
    "Base",
    "Database",
    "DBSession",
    "build_engine",
    "CacheEntry",
]
