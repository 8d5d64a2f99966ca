"""Cache entry model - one memoized backend response."""
from datetime import datetime

from sqlalchemy import DateTime, Index, String, Text
from sqlalchemy.orm import Mapped, mapped_column
from sqlalchemy.sql import func

from database.base import Base


class CacheEntry(Base):
    """
    A backend response keyed by the hash of (model id, operation, canonical input).

    `value` holds JSON: response text, an embedding vector or a list of image handles.
    """

    __tablename__ = "cache_entries"

    key: Mapped[str] = mapped_column(String(64), primary_key=True)
    model_id: Mapped[str] = mapped_column(String(255), nullable=False)
    operation: Mapped[str] = mapped_column(String(64), nullable=False)
    value: Mapped[str] = mapped_column(Text, nullable=False)
    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
        nullable=False
    )

    __table_args__ = (
        Index("ix_cache_entries_operation", "operation"),
    )

    def __repr__(self) -> str:
        return f"<CacheEntry(key={self.key[:12]}, model={self.model_id}, op={self.operation})>"
