"""
Error handler middleware.

Turns exceptions into an exit code and a readable message on stderr.
"""

import logging
import sys

from cli.messages import ErrorMessages
from cli.middlewares.base import CommandMiddleware
from core.exceptions import (
    AuthError,
    BackendError,
    ConfigError,
    CountMismatch,
    DatasetError,
    EvaluationError,
    PreconditionError,
    RepdiffError,
    StorageError,
    TransportError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_STORAGE = 4
EXIT_DATASET = 5
EXIT_INTERRUPTED = 130


class ErrorHandlerMiddleware(CommandMiddleware):
    """Map the exception hierarchy to exit codes."""

    # Exception type -> (title, exit code); looked up along the MRO
    EXCEPTION_HANDLERS = {
        ConfigError: (ErrorMessages.INVALID_CONFIG, EXIT_USAGE),
        PreconditionError: (ErrorMessages.INVALID_ARGUMENTS, EXIT_USAGE),
        AuthError: (ErrorMessages.AUTH_FAILED, EXIT_BACKEND),
        TransportError: (ErrorMessages.SERVICE_UNAVAILABLE, EXIT_BACKEND),
        BackendError: (None, EXIT_BACKEND),
        StorageError: (ErrorMessages.STORAGE_FAILED, EXIT_STORAGE),
        DatasetError: (None, EXIT_DATASET),
        EvaluationError: (None, EXIT_ERROR),
    }

    def __init__(self, stream=None):
        self.stream = stream

    async def __call__(self, handler, args, data):
        try:
            return await handler(args, data)

        except RepdiffError as e:
            return self._handle_business_error(e)

        except KeyboardInterrupt:
            self._print(ErrorMessages.INTERRUPTED)
            return EXIT_INTERRUPTED

        except Exception as e:
            logger.error(f"Unhandled error: {e}", exc_info=True, extra={"operation": data.get("command")})
            self._print(ErrorMessages.GENERIC_ERROR)
            return EXIT_ERROR

    def _handle_business_error(self, error: RepdiffError) -> int:
        title, code = self._lookup(error)

        if isinstance(error, CountMismatch):
            message = ErrorMessages.count_mismatch(error.what, error.expected, error.actual)
        elif title is not None and title != error.message:
            message = ErrorMessages.with_reason(title, error.message)
        else:
            message = error.message

        logger.warning(f"{type(error).__name__}: {error.message}")
        self._print(message)
        return code

    def _lookup(self, error: RepdiffError) -> tuple[str | None, int]:
        for cls in type(error).__mro__:
            if cls in self.EXCEPTION_HANDLERS:
                return self.EXCEPTION_HANDLERS[cls]
        return None, EXIT_ERROR

    def _print(self, message: str) -> None:
        print(f"error: {message}", file=self.stream or sys.stderr)
