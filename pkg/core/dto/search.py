"""Search trace DTOs."""
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class DescriptionDTO(BaseModel):
    """Serialized prompt description."""

    text: str = ""
    key_concepts: list[str] = Field(default_factory=list)
    thought: str = ""


class CandidateOutcome(BaseModel):
    """One candidate prompt and how it was classified."""

    prompt_id: str
    text: str
    votes: list[int] = Field(default_factory=list, description="Per image-pair divergence scores")
    diverging: bool = False
    refused: bool = False


class IterationTrace(BaseModel):
    """Everything one search iteration produced."""

    index: int = Field(..., ge=0)
    description: DescriptionDTO
    description_fallback: bool = Field(False, description="Previous description reused after parse failures")
    sampled_div: list[str] = Field(default_factory=list)
    sampled_non: list[str] = Field(default_factory=list)
    candidates: list[CandidateOutcome] = Field(default_factory=list)
    n_div: int = Field(0, ge=0)
    n_can: int = Field(0, ge=0)
    sigma: float = Field(0.0, ge=0.0, le=1.0)
    too_few_candidates: bool = False

    @model_validator(mode="after")
    def check_sigma(self) -> "IterationTrace":
        """Sigma is the exact ratio of diverging to scored candidates."""
        expected = self.n_div / self.n_can if self.n_can else 0.0
        if self.n_div > self.n_can or self.sigma != expected:
            raise ValueError(f"sigma {self.sigma} does not equal {self.n_div}/{self.n_can}")
        return self


class SearchTrace(BaseModel):
    """Full record of a description search, enough to audit or replay it."""

    attribute: str
    mode: Literal["generate", "retrieve"]
    seed_div: int = Field(0, ge=0, description="Diverging prompts in the seeded bank")
    seed_non: int = Field(0, ge=0)
    iterations: list[IterationTrace] = Field(default_factory=list)
    best_index: Optional[int] = None
    terminated_early: bool = False

    @property
    def sigmas(self) -> list[float]:
        return [it.sigma for it in self.iterations]

    @property
    def best_sigma(self) -> float:
        if self.best_index is None:
            return 0.0
        return self.iterations[self.best_index].sigma

    @property
    def best_description(self) -> Optional[DescriptionDTO]:
        if self.best_index is None:
            return None
        return self.iterations[self.best_index].description
