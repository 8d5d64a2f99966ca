"""Error messages for user-facing error handling."""
from dataclasses import dataclass


@dataclass(frozen=True)
class ErrorMessages:
    """Messages printed to stderr when a command fails."""

    # General errors
    GENERIC_ERROR = "Unexpected error. See logs/errors.log for the traceback."
    INTERRUPTED = "Interrupted. Rerun the same command to resume from the journal."

    # Input errors
    INVALID_CONFIG = "Configuration problem"
    INVALID_ARGUMENTS = "Invalid arguments"

    # Model services
    AUTH_FAILED = "The model service rejected the API key. Check the variable named by api_key_env."
    SERVICE_UNAVAILABLE = "Model service unavailable after retries. Rerun later; finished calls are cached."

    # Storage
    STORAGE_FAILED = "Cache or journal storage failed"

    @staticmethod
    def with_reason(title: str, reason: str) -> str:
        """Format a titled error."""
        return f"{title}: {reason}"

    @staticmethod
    def count_mismatch(what: str, expected: int, actual: int) -> str:
        return f"Bundle {what}: manifest says {expected}, found {actual}"
