"""
Custom application exceptions.

Every error raised on purpose by repdiff derives from RepdiffError so the
command layer can map it to an exit code and a readable message.
"""
from typing import Optional, Sequence


class RepdiffError(Exception):
    """Base exception for all application errors."""

    message: str = "Unexpected error"

    def __init__(self, message: Optional[str] = None, **kwargs):
        self.message = message or self.message
        self.details = kwargs
        super().__init__(self.message)


# ============== General ==============

class PreconditionError(RepdiffError):
    """An operation was called with arguments it does not accept."""
    message = "Invalid arguments"


class ConfigError(RepdiffError):
    """Run configuration is missing or invalid."""
    message = "Invalid configuration"


class StorageError(RepdiffError):
    """Cache, journal or blob storage failed."""
    message = "Storage failure"


# ============== Backends ==============

class BackendError(RepdiffError):
    """Base error for external model services."""
    message = "Model service error"


class TransportError(BackendError):
    """Network failure or HTTP error that survived all retries."""
    message = "Model service unreachable"

    def __init__(self, message: Optional[str] = None, status: Optional[int] = None, **kwargs):
        self.status = status
        super().__init__(message, status=status, **kwargs)


class AuthError(BackendError):
    """The service rejected the credentials (401/403)."""
    message = "Authentication with model service failed"


class MalformedResponse(BackendError):
    """The response body did not contain the expected payload."""
    message = "Malformed response from model service"


class PayloadTooLarge(BackendError):
    """The request payload was rejected for its size (413)."""
    message = "Request payload too large"


class ContentRefused(BackendError):
    """The service refused to synthesize a prompt under its content policy."""
    message = "Prompt refused by content policy"

    def __init__(self, prompt: str, reason: Optional[str] = None):
        self.prompt = prompt
        self.reason = reason
        super().__init__(f"Prompt refused: {reason or 'content policy'}", prompt=prompt)


# ============== Scoring ==============

class ScoringError(RepdiffError):
    """Base error for divergence scoring."""
    message = "Scoring error"


class DimMismatch(ScoringError):
    """Two embeddings that must share a dimension do not."""
    message = "Embedding dimension mismatch"

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Embedding dimension mismatch: expected {expected}, got {actual}")


class EmptySet(ScoringError):
    """Set similarity over an empty image set."""
    message = "Image set is empty"


class RaggedRecord(ScoringError):
    """A prompt record holds different image counts for the two models."""
    message = "Prompt record has unequal image counts"

    def __init__(self, record_id: str, count_a: int, count_b: int):
        self.record_id = record_id
        super().__init__(
            f"Record {record_id} has {count_a} images for model A and {count_b} for model B",
            record_id=record_id,
        )


# ============== Simulator ==============

class SimError(RepdiffError):
    """Base error for the offline simulator."""
    message = "Simulator error"


class InvalidSize(SimError):
    """World dimensions are inconsistent."""
    message = "Invalid simulator world size"


class EmptyBank(SimError):
    """Describing a prompt bank that has no prompts on either side."""
    message = "Prompt bank is empty"


# ============== Parsing ==============

class ParseError(RepdiffError):
    """A model response did not follow the requested format."""
    message = "Could not parse model response"

    def __init__(self, message: Optional[str] = None, raw: str = ""):
        self.raw = raw
        super().__init__(message, raw=raw[:200])


# ============== Discovery & search ==============

class DiscoveryError(RepdiffError):
    """Base error for attribute discovery."""
    message = "Attribute discovery failed"


class MissingRaster(DiscoveryError):
    """A grid was requested for images without raster payloads."""
    message = "Image raster missing"

    def __init__(self, image_ids: Sequence[str]):
        self.image_ids = list(image_ids)
        super().__init__(f"Image raster missing for {len(self.image_ids)} image(s)", image_ids=self.image_ids)


class SearchError(RepdiffError):
    """Base error for description search."""
    message = "Description search failed"


class NoDiverging(SearchError):
    """No prompt diverges on the attribute, so there is nothing to describe."""
    message = "No diverging prompts for attribute"

    def __init__(self, attribute: str):
        self.attribute = attribute
        super().__init__(f"No diverging prompts for attribute '{attribute}'", attribute=attribute)


class TooFewCandidates(SearchError):
    """Fewer candidate prompts than requested survived filtering."""
    message = "Too few candidate prompts"

    def __init__(self, candidates: Sequence[str], requested: int):
        self.candidates = list(candidates)
        self.requested = requested
        super().__init__(f"Only {len(self.candidates)}/{requested} candidate prompts")


# ============== Baselines ==============

class BaselineError(RepdiffError):
    """Base error for comparison methods."""
    message = "Baseline failed"


class EmptyDocument(BaselineError):
    """A TF-IDF document contains no tokens."""
    message = "Document is empty"


# ============== Dataset ==============

class DatasetError(RepdiffError):
    """Base error for benchmark bundles."""
    message = "Dataset error"


class ManifestError(DatasetError):
    """Bundle manifest is missing, unreadable or points to missing files."""
    message = "Invalid bundle manifest"


class CountMismatch(DatasetError):
    """Bundle contents do not match the counts declared in the manifest."""
    message = "Bundle count mismatch"

    def __init__(self, what: str, expected: int, actual: int):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"Bundle {what}: expected {expected}, found {actual}")


# ============== Evaluation ==============

class EvaluationError(RepdiffError):
    """Base error for evaluation."""
    message = "Evaluation error"


class LengthMismatch(EvaluationError):
    """Two rating vectors have different lengths."""
    message = "Rating vectors differ in length"


class DegenerateMarginals(EvaluationError):
    """Chance agreement is total, so kappa has no denominator."""
    message = "Degenerate rating marginals"
