"""Tests for the cache schema migrations."""
from sqlalchemy import create_engine, inspect, text

from database import migrations
from database.base import Database
from database.models import CacheEntry
from services.cache import CacheStore


def sqlite_urls(path):
    return f"sqlite+aiosqlite:///{path}", f"sqlite:///{path}"


def test_upgrade_builds_the_model_schema(tmp_path):
    """Test the migrated table matches the CacheEntry model and records the head revision."""
    url, sync_url = sqlite_urls(tmp_path / "cache.db")

    migrations.upgrade(url)

    engine = create_engine(sync_url)
    try:
        inspector = inspect(engine)
        columns = {c["name"] for c in inspector.get_columns("cache_entries")}
        assert columns == set(CacheEntry.__table__.columns.keys())
        assert inspector.get_pk_constraint("cache_entries")["constrained_columns"] == ["key"]
        assert [i["name"] for i in inspector.get_indexes("cache_entries")] == ["ix_cache_entries_operation"]
        with engine.connect() as conn:
            assert conn.execute(text("SELECT version_num FROM alembic_version")).scalar() == migrations.head_revision()
    finally:
        engine.dispose()


def test_downgrade_drops_the_table(tmp_path):
    """Test downgrading to base removes the cache table."""
    url, sync_url = sqlite_urls(tmp_path / "cache.db")
    migrations.upgrade(url)

    migrations.downgrade(url)

    engine = create_engine(sync_url)
    try:
        assert "cache_entries" not in inspect(engine).get_table_names()
    finally:
        engine.dispose()


async def test_file_database_is_migrated_and_reopened(tmp_path):
    """Test a migrated file database serves the cache and survives a second migrate."""
    url, _ = sqlite_urls(tmp_path / "runs" / "cache.db")

    first = Database(url)
    await first.migrate()
    await CacheStore(first).get_or_compute("k", _value, model_id="m", operation="chat")
    await first.close()

    second = Database(url)
    await second.migrate()
    assert await CacheStore(second).entry_counts() == {"chat": 1}
    await second.close()


async def test_memory_database_skips_alembic():
    """Test in-memory databases are created from the metadata."""
    database = Database("sqlite+aiosqlite:///:memory:")
    assert database.in_memory

    await database.migrate()

    assert await CacheStore(database).entry_counts() == {}
    await database.close()


async def _value():
    return "v"
