"""Base repository bound to one session and one model."""
from abc import ABC
from typing import Any, Generic, Optional, Type, TypeVar

from sqlalchemy.ext.asyncio import AsyncSession

from database.base import Base

ModelType = TypeVar("ModelType", bound=Base)


class BaseRepository(ABC, Generic[ModelType]):
    """Subclasses set `model_class` and add their own queries."""

    model_class: Type[ModelType]

    def __init__(self, session: AsyncSession):
        self.session = session

    async def get(self, pk: Any) -> Optional[ModelType]:
        """Entity by primary key, or None."""
        return await self.session.get(self.model_class, pk)
