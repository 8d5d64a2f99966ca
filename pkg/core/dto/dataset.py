"""Benchmark bundle DTOs."""
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator

SCHEMA_VERSION = "id2.v1"


class RepresentationSpec(BaseModel):
    """A ground-truth divergent representation: an attribute and the concepts that trigger it."""

    attribute: str = Field(..., min_length=1)
    concepts: list[str] = Field(..., min_length=1)
    category: Literal["related", "abstract", "bias", "manual"] = "manual"

    @field_validator("concepts")
    @classmethod
    def validate_concepts(cls, v: list[str]) -> list[str]:
        """Concepts must be non-empty strings."""
        cleaned = [c.strip() for c in v]
        if any(not c for c in cleaned):
            raise ValueError("concepts must be non-empty strings")
        return cleaned

    @field_validator("attribute")
    @classmethod
    def strip_attribute(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("attribute must be non-empty")
        return v.strip()


class BundleCounts(BaseModel):
    pairs: int = Field(..., ge=0)
    images_per_prompt: int = Field(..., ge=1)
    distractors: int = Field(..., ge=0)


class BundleManifest(BaseModel):
    """Manifest of a bundle directory; readable without loading any raster."""

    schema_version: str = SCHEMA_VERSION
    spec: RepresentationSpec
    model_id: str
    model_tag: str
    live: bool = False
    requested_pairs: int = Field(..., ge=1)
    counts: BundleCounts
    complete: bool = True
    flagged_pairs: list[str] = Field(default_factory=list, description="Pairs above the edit-distance flag")

    @field_validator("schema_version")
    @classmethod
    def validate_schema(cls, v: str) -> str:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported bundle schema '{v}'")
        return v


class PromptPairRow(BaseModel):
    """One line of pairs.jsonl."""

    id: str
    prompt: str
    altered_prompt: str
    edit_distance: float = Field(..., ge=0.0, le=1.0)
    flagged: bool = False
    images_a: list[dict[str, Any]] = Field(..., description="Images of the altered prompt")
    images_b: list[dict[str, Any]] = Field(..., description="Images of the original prompt")


class DistractorRow(BaseModel):
    """One line of distractors.jsonl: same model and prompt, different seeds."""

    id: str
    prompt: str
    images_a: list[dict[str, Any]]
    images_b: list[dict[str, Any]]
