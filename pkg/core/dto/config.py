"""Run configuration DTOs."""
import os
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class BackendConfig(BaseModel):
    """Connection settings for one external model service."""

    base_url: str = Field("https://api.openai.com/v1", description="OpenAI-compatible base URL")
    api_key_env: str = Field("OPENAI_API_KEY", description="Name of the env var holding the API key")
    model_id: str = Field(..., min_length=1, description="Model identifier sent to the service")
    max_parallel: int = Field(4, ge=1, description="Max concurrent requests")
    retry_limit: int = Field(3, ge=0, le=10, description="Retries on transient failures")
    timeout_ms: int = Field(60_000, gt=0, description="Per-request timeout in milliseconds")
    temperature: float = Field(1.0, ge=0.0, description="Sampling temperature for generation")
    seed: Optional[int] = Field(None, description="Sampling seed, when the service supports one")
    image_size: str = Field("1024x1024", description="Requested image size for synthesis")

    def api_key(self) -> Optional[str]:
        """Read the API key from the configured environment variable."""
        return os.getenv(self.api_key_env)


class Thresholds(BaseModel):
    """Presence threshold t and gap threshold delta of the divergence score."""

    t: float = Field(0.0, description="Presence threshold on model A similarity")
    delta: float = Field(0.05, gt=0.0, description="Required similarity gap between A and B")


def _benchmark_thresholds() -> Thresholds:
    return Thresholds(t=0.2, delta=0.05)


class ThresholdsConfig(BaseModel):
    """Thresholds per stage."""

    discovery: Thresholds = Field(default_factory=Thresholds)
    search: Thresholds = Field(default_factory=Thresholds)
    benchmark: Thresholds = Field(default_factory=_benchmark_thresholds)


class EarlyStopConfig(BaseModel):
    """Abort a search whose best score stays under `floor` after `window` iterations."""

    window: int = Field(5, ge=1)
    floor: float = Field(0.1, gt=0.0, lt=1.0)


class SearchConfig(BaseModel):
    """Description search settings."""

    iterations: int = Field(10, ge=1, description="Max iterations N")
    sample_size: int = Field(25, ge=1, description="Prompts sampled per bank side (B)")
    candidates_per_iter: int = Field(25, ge=1, description="Candidate prompts per iteration (k)")
    mode: Literal["generate", "retrieve"] = "generate"
    early_stop: EarlyStopConfig = Field(default_factory=EarlyStopConfig)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    images_per_prompt: int = Field(3, ge=1)
    seed: int = 0


class DiscoveryConfig(BaseModel):
    """Attribute discovery settings."""

    batch_size: int = Field(50, ge=1, description="Prompts shown to the vision model")
    images_per_prompt: int = Field(3, ge=1)
    aggregation: Literal["mean", "max"] = "mean"
    attribute_template: str = Field("{attribute}", description="Text embedded for an attribute")
    score_floor: float = Field(0.05, ge=0.0, le=1.0, description="Attributes below this are not searched")
    cell_px: int = Field(512, gt=0)
    max_attribute_words: int = Field(5, ge=1)
    seed: int = 0

    @field_validator("attribute_template")
    @classmethod
    def validate_template(cls, v: str) -> str:
        """Template must place the attribute."""
        if "{attribute}" not in v:
            raise ValueError("attribute_template must contain '{attribute}'")
        return v


class DatasetConfig(BaseModel):
    """Benchmark bundle construction settings."""

    n_prompts: int = Field(50, ge=1)
    pairs_per_prompt: int = Field(3, ge=1, description="Image pairs per prompt pair")
    distractors: int = Field(200, ge=0)
    batch: int = Field(5, ge=1, description="Prompt pairs requested per language model call")
    min_valid_pairs: int = Field(45, ge=0)
    acceptance: float = Field(0.6, gt=0.0, le=1.0, description="Diverging fraction for a valid bundle")
    edit_flag: float = Field(0.5, ge=0.0, le=1.0, description="Normalized edit distance flagged for review")
    model_tag: str = Field("B", description="The single model that renders both prompts")
    seed: int = 0


class SimConfig(BaseModel):
    """Offline simulator settings."""

    world_path: Optional[str] = None
    vocab: int = 200
    concepts: int = 3
    world_seed: int = 7
    error_rate: float = Field(0.0, ge=0.0, le=1.0)
    noise: float = Field(0.0, ge=0.0)
    description_error_rate: float = Field(0.0, ge=0.0, le=1.0)
    n_prompts: int = Field(300, ge=1)
    prompts_seed: int = 0


class PathsConfig(BaseModel):
    """Input and output locations."""

    prompts: Optional[str] = Field(None, description="Initial prompts JSONL ({id, text} per line)")
    out: str = "runs/out"
    database_url: Optional[str] = Field(None, description="Overrides the cache database URL")
    blob_dir: str = "runs/blobs"
    journal: str = "runs/journal.jsonl"


def _backend(model_id: str, temperature: float = 1.0) -> BackendConfig:
    return BackendConfig(model_id=model_id, temperature=temperature)


class BackendsConfig(BaseModel):
    """One backend per capability; image backends per model tag."""

    text: BackendConfig = Field(default_factory=lambda: _backend("gpt-4o"))
    vision: BackendConfig = Field(default_factory=lambda: _backend("gpt-4o", 0.0))
    embedding: BackendConfig = Field(default_factory=lambda: _backend("clip-vit-large-patch14"))
    image_a: BackendConfig = Field(default_factory=lambda: _backend("model-a"))
    image_b: BackendConfig = Field(default_factory=lambda: _backend("model-b"))


class RunConfig(BaseModel):
    """Complete configuration of a run, loaded from one JSON file."""

    mode: Literal["sim", "live"] = "sim"
    seed: int = 0
    backends: BackendsConfig = Field(default_factory=BackendsConfig)
    thresholds: ThresholdsConfig = Field(default_factory=ThresholdsConfig)
    discovery: DiscoveryConfig = Field(default_factory=DiscoveryConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @model_validator(mode="after")
    def sync_search_thresholds(self) -> "RunConfig":
        """The search stage reads its thresholds from the thresholds block."""
        if "thresholds" not in self.search.model_fields_set:
            self.search.thresholds = self.thresholds.search
        return self

    def model_ids(self) -> list[str]:
        """Identifiers of the compared model pair."""
        return [self.backends.image_a.model_id, self.backends.image_b.model_id]
