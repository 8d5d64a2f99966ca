"""
Use cases: one class per command-level operation, run against a RunContext.
"""

from services.use_cases.benchmark import (
    BaselineUseCase,
    EvaluateUseCase,
    GenerateBundlesUseCase,
    ValidateBundleUseCase,
)
from services.use_cases.pipeline import (
    DiscoverUseCase,
    LoadRecordsUseCase,
    RunPipelineUseCase,
    SearchAttributeUseCase,
)

__all__ = [
    'BaselineUseCase',
    'DiscoverUseCase',
    'EvaluateUseCase',
    'GenerateBundlesUseCase',
    'LoadRecordsUseCase',
    'RunPipelineUseCase',
    'SearchAttributeUseCase',
    'ValidateBundleUseCase',
]
