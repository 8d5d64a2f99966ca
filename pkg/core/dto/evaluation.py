"""Evaluation DTOs."""
from typing import Optional

from pydantic import BaseModel, Field, computed_field, model_validator

from core.dto.dataset import RepresentationSpec


class JudgeScore(BaseModel):
    """A 1-3 judge rating and its mapped score in {0, 0.5, 1}."""

    rating: int = Field(..., ge=1, le=3)
    raw_response: str = ""
    flagged: bool = Field(False, description="Rating defaulted after unparseable responses")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def mapped(self) -> float:
        return (self.rating - 1) / 2


class RepresentationPrediction(BaseModel):
    """Ranked predictions made on one ground-truth representation."""

    truth_attribute: str
    attributes: list[str] = Field(default_factory=list, description="Ranked by mean divergence")
    descriptions: list[list[str]] = Field(default_factory=list, description="Key concepts, ranked by sigma")


class TopK(BaseModel):
    top1: float = Field(0.0, ge=0.0, le=1.0)
    top5: float = Field(0.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_prefix(self) -> "TopK":
        """A longer prefix can only raise the max."""
        if self.top5 < self.top1:
            raise ValueError("top5 must not be below top1")
        return self


class RepresentationResult(BaseModel):
    """Judge outcome for one ground-truth representation."""

    truth: RepresentationSpec
    best_attribute: Optional[str] = None
    best_description: Optional[list[str]] = None
    attribute: TopK = Field(default_factory=TopK)
    description: TopK = Field(default_factory=TopK)
    attribute_judgements: list[JudgeScore] = Field(default_factory=list)
    description_judgements: list[JudgeScore] = Field(default_factory=list)


class EvalReport(BaseModel):
    """Per-representation results and their averages."""

    results: list[RepresentationResult] = Field(default_factory=list)
    attribute: TopK = Field(default_factory=TopK)
    description: TopK = Field(default_factory=TopK)
    kappa: dict[str, float] = Field(default_factory=dict)
