"""
Data Transfer Objects (DTOs) for data validation.

This package contains Pydantic models for configuration files and the JSON
artifacts written by each command.
"""

from core.dto.config import (
    BackendConfig,
    BackendsConfig,
    DatasetConfig,
    DiscoveryConfig,
    EarlyStopConfig,
    PathsConfig,
    RunConfig,
    SearchConfig,
    SimConfig,
    Thresholds,
    ThresholdsConfig,
)
from core.dto.dataset import (
    SCHEMA_VERSION,
    BundleCounts,
    BundleManifest,
    DistractorRow,
    PromptPairRow,
    RepresentationSpec,
)
from core.dto.evaluation import (
    EvalReport,
    JudgeScore,
    RepresentationPrediction,
    RepresentationResult,
    TopK,
)
from core.dto.report import AttributeFailure, DiscoveredRepresentation, RunReport
from core.dto.search import CandidateOutcome, DescriptionDTO, IterationTrace, SearchTrace

__all__ = [
    'BackendConfig',
    'BackendsConfig',
    'DatasetConfig',
    'DiscoveryConfig',
    'EarlyStopConfig',
    'PathsConfig',
    'RunConfig',
    'SearchConfig',
    'SimConfig',
    'Thresholds',
    'ThresholdsConfig',
    'SCHEMA_VERSION',
    'BundleCounts',
    'BundleManifest',
    'DistractorRow',
    'PromptPairRow',
    'RepresentationSpec',
    'EvalReport',
    'JudgeScore',
    'RepresentationPrediction',
    'RepresentationResult',
    'TopK',
    'AttributeFailure',
    'DiscoveredRepresentation',
    'RunReport',
    'CandidateOutcome',
    'DescriptionDTO',
    'IterationTrace',
    'SearchTrace',
]
