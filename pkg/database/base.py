"""Database base configuration and session management."""
import asyncio
from pathlib import Path
from typing import AsyncGenerator

from sqlalchemy.engine import make_url
from sqlalchemy.ext.asyncio import AsyncEngine, AsyncSession, async_sessionmaker, create_async_engine
from sqlalchemy.orm import DeclarativeBase
from sqlalchemy.pool import StaticPool


class Base(DeclarativeBase):
    """Base class for all database models."""
    pass


def build_engine(url: str, echo: bool = False) -> AsyncEngine:
    """
    Create an async engine for the cache database.

    In-memory SQLite shares one connection so every session sees the same
    tables; file-backed SQLite gets its parent directory created.
    """
    parsed = make_url(url)
    if parsed.get_backend_name() != "sqlite":
        return create_async_engine(url, echo=echo)
    if parsed.database in (None, "", ":memory:"):
        return create_async_engine(
            url,
            echo=echo,
            poolclass=StaticPool,
            connect_args={"check_same_thread": False},
        )
    Path(parsed.database).parent.mkdir(parents=True, exist_ok=True)
    return create_async_engine(url, echo=echo)


class Database:
    """Engine and session factory for one database URL."""

    def __init__(self, url: str, echo: bool = False):
        self.url = url
        parsed = make_url(url)
        self.in_memory = parsed.get_backend_name() == "sqlite" and parsed.database in (None, "", ":memory:")
        self.engine = build_engine(url, echo=echo)
        self.session_maker = async_sessionmaker(
            self.engine,
            class_=AsyncSession,
            expire_on_commit=False,
        )

    async def get_db(self) -> AsyncGenerator[AsyncSession, None]:
        """Yield a session that commits on success and rolls back on error."""
        async with self.session_maker() as session:
            try:
                yield session
                await session.commit()
            except Exception:
                await session.rollback()
                raise
            finally:
                await session.close()

    def session(self) -> "DBSession":
        return DBSession(self)

    async def init_db(self):
        """Initialize database - create all tables."""
        # Import models so their tables are registered on Base.metadata
        import database.models  # noqa: F401

        async with self.engine.begin() as conn:
            await conn.run_sync(Base.metadata.create_all)

    async def migrate(self) -> None:
        """
        Bring the schema to the latest alembic revision.

        In-memory databases live on one pooled connection alembic cannot
        reach, so they get `init_db` instead.
        """
        if self.in_memory:
            await self.init_db()
            return
        from database import migrations

        await asyncio.to_thread(migrations.upgrade, self.url)

    async def close(self):
        """Close database connections."""
        await self.engine.dispose()


class DBSession:
    """Context manager wrapper for Database.get_db()."""

    def __init__(self, database: Database):
        self._database = database
        self._gen = None
        self._session = None

    async def __aenter__(self) -> AsyncSession:
        self._gen = self._database.get_db()
        self._session = await self._gen.__anext__()
        return self._session

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        if not self._gen:
            return False
        if exc_type is not None:
            try:
                await self._gen.athrow(exc_type, exc_val, exc_tb)
            except StopAsyncIteration:
                pass
            return False
        try:
            await self._gen.__anext__()
        except StopAsyncIteration:
            pass
        return False
