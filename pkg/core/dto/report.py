"""Run report DTOs."""
import json
from typing import Any

from pydantic import BaseModel, Field

from core.dto.search import DescriptionDTO


class DiscoveredRepresentation(BaseModel):
    """An attribute and the best prompt description found for it."""

    attribute: str
    mean_divergence: float = Field(..., ge=0.0, le=1.0)
    provenance: str = "vlm"
    description: DescriptionDTO
    best_sigma: float = Field(..., ge=0.0, le=1.0)
    best_iteration: int | None = None
    terminated_early: bool = False
    trace_path: str


class AttributeFailure(BaseModel):
    """An attribute whose search failed without aborting the run."""

    attribute: str
    error: str
    message: str


class RunReport(BaseModel):
    """The mapping from prompt descriptions to diverging attributes found for a model pair."""

    models: list[str]
    n_prompts: int = 0
    attributes_ranked: int = 0
    discovered: list[DiscoveredRepresentation] = Field(default_factory=list)
    failures: list[AttributeFailure] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)
    cache: dict[str, int] = Field(default_factory=dict, description="Cache entries per operation")

    def to_json(self) -> str:
        """Deterministic rendering: sorted keys, no timestamps."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
