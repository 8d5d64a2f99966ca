"""Command middleware chain."""
from abc import ABC, abstractmethod
from argparse import Namespace
from typing import Any, Awaitable, Callable, Sequence

CommandHandler = Callable[[Namespace, dict[str, Any]], Awaitable[int]]


class CommandMiddleware(ABC):
    """Wraps a command handler; `data` is shared along the chain."""

    @abstractmethod
    async def __call__(self, handler: CommandHandler, args: Namespace, data: dict[str, Any]) -> int:
        ...


def wrap(handler: CommandHandler, middlewares: Sequence[CommandMiddleware]) -> CommandHandler:
    """Chain middlewares around a handler; the first one runs outermost."""
    for middleware in reversed(middlewares):
        handler = _bind(middleware, handler)
    return handler


def _bind(middleware: CommandMiddleware, handler: CommandHandler) -> CommandHandler:
    async def call(args: Namespace, data: dict[str, Any]) -> int:
        return await middleware(handler, args, data)

    return call
