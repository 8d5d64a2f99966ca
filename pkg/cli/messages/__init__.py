"""User-facing texts."""
from cli.messages.errors import ErrorMessages

__all__ = [
    "ErrorMessages",
]
