"""
Base use case class.
"""
from abc import ABC, abstractmethod
from typing import Generic, TypeVar

from services.context import RunContext


ResultType = TypeVar("ResultType")


class BaseUseCase(ABC, Generic[ResultType]):
    """
    One operation of the tool, run against an open RunContext.

    A use case orchestrates services and storage; the CLI handlers only parse
    arguments, call `execute` and render the result.
    """

    def __init__(self, context: RunContext):
        self.context = context
        self.config = context.config
        self.suite = context.suite

    @abstractmethod
    async def execute(self, *args, **kwargs) -> ResultType:
        """Run the operation."""
        pass
