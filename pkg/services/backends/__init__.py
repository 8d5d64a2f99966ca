"""Model service backends: interfaces, HTTP implementations and simulator."""
from services.backends.base import (
    Backend,
    BackendSuite,
    EmbeddingBackend,
    ImageBackend,
    TextBackend,
    VisionBackend,
)
from services.backends.http import build_http_suite
from services.backends.sim import build_sim_suite

__all__ = [
    'Backend',
    'BackendSuite',
    'EmbeddingBackend',
    'ImageBackend',
    'TextBackend',
    'VisionBackend',
    'build_http_suite',
    'build_sim_suite',
]
