"""
Logging middleware for command timing.
"""

import logging
import time

from cli.middlewares.base import CommandMiddleware

logger = logging.getLogger(__name__)


class LoggingMiddleware(CommandMiddleware):
    """Log each command with its duration."""

    async def __call__(self, handler, args, data):
        command = data.get("command", "?")
        start_time = time.time()
        logger.info(f"Command {command} started", extra={"operation": command})

        try:
            result = await handler(args, data)
            duration = time.time() - start_time
            logger.info(
                f"Command {command} finished in {duration:.2f}s (exit {result})",
                extra={"duration": duration, "operation": command}
            )
            return result
        except Exception as e:
            duration = time.time() - start_time
            logger.error(
                f"Command {command} failed after {duration:.2f}s: {e}",
                exc_info=True,
                extra={"duration": duration, "operation": command}
            )
            raise
