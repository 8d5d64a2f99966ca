"""Command middlewares."""
from cli.middlewares.base import CommandMiddleware, wrap
from cli.middlewares.error_handler import ErrorHandlerMiddleware
from cli.middlewares.logging import LoggingMiddleware

__all__ = [
    "CommandMiddleware",
    "ErrorHandlerMiddleware",
    "LoggingMiddleware",
    "wrap",
]
