"""Runtime value types shared by the backends, scoring and search."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Optional

import numpy as np

from core.exceptions import PreconditionError

NORM_TOLERANCE = 1e-6


def content_hash(*parts: str | bytes) -> str:
    """SHA-256 hex digest over the given parts, separated by a unit separator."""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode("utf-8") if isinstance(part, str) else part)
        digest.update(b"\x1f")
    return digest.hexdigest()


def normalize_text(text: str) -> str:
    """Collapse whitespace runs so equal prompts share one id and cache key."""
    return " ".join(text.split())


def prompt_id(text: str) -> str:
    """Stable short id of a prompt text."""
    return content_hash(normalize_text(text))[:16]


@dataclass(eq=False)
class Embedding:
    """A fixed-length vector, L2-normalized at the backend boundary."""

    vector: np.ndarray
    normalized: bool = True

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])

    @classmethod
    def from_vector(cls, values: Iterable[float] | np.ndarray) -> Embedding:
        vector = np.asarray(values, dtype=np.float64).ravel()
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise PreconditionError("Cannot normalize a zero vector")
        return cls(vector / norm, normalized=True)

    @classmethod
    def from_list(cls, values: list[float]) -> Embedding:
        """Rebuild a stored embedding without renormalizing it."""
        return cls(np.asarray(values, dtype=np.float64), normalized=True)

    def to_list(self) -> list[float]:
        return [float(x) for x in self.vector]

    def is_unit(self) -> bool:
        return abs(float(np.linalg.norm(self.vector)) - 1.0) < NORM_TOLERANCE


@dataclass(frozen=True)
class ImageHandle:
    """
    Reference to one generated image.

    In live mode the id is the hash of the raster bytes; in sim mode it is the
    hash of (prompt, model, seed) and no raster exists. Composite grids list
    the images they tile in `members`.
    """

    id: str
    source_prompt_id: str
    model_tag: str
    seed: int
    raster: Optional[bytes] = field(default=None, repr=False, compare=False)
    source_prompt: Optional[str] = None
    members: tuple[ImageHandle, ...] = field(default=(), repr=False)

    def with_raster(self, raster: bytes) -> ImageHandle:
        return replace(self, raster=raster)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source_prompt_id": self.source_prompt_id,
            "model_tag": self.model_tag,
            "seed": self.seed,
            "source_prompt": self.source_prompt,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], raster: Optional[bytes] = None) -> ImageHandle:
        return cls(
            id=data["id"],
            source_prompt_id=data["source_prompt_id"],
            model_tag=str(data["model_tag"]),
            seed=int(data["seed"]),
            raster=raster,
            source_prompt=data.get("source_prompt"),
        )


class PromptOrigin(str, Enum):
    """Where a prompt record came from."""
    INITIAL = "initial"
    GENERATED = "generated"
    RETRIEVED = "retrieved"
    PAIR = "pair"
    DISTRACTOR = "distractor"


@dataclass
class PromptRecord:
    """A prompt with its images and image embeddings for both models."""

    id: str
    text: str
    images_a: list[ImageHandle] = field(default_factory=list)
    images_b: list[ImageHandle] = field(default_factory=list)
    emb_a: list[Embedding] = field(default_factory=list)
    emb_b: list[Embedding] = field(default_factory=list)
    origin: PromptOrigin = PromptOrigin.INITIAL
    iteration: Optional[int] = None

    @classmethod
    def from_text(
        cls,
        text: str,
        origin: PromptOrigin = PromptOrigin.INITIAL,
        iteration: Optional[int] = None,
    ) -> PromptRecord:
        return cls(id=prompt_id(text), text=normalize_text(text), origin=origin, iteration=iteration)

    @property
    def n_images(self) -> int:
        return len(self.emb_a)

    @property
    def origin_label(self) -> str:
        if self.iteration is None:
            return self.origin.value
        return f"{self.origin.value}@{self.iteration}"

    def is_embedded(self) -> bool:
        return bool(self.emb_a) and bool(self.emb_b)

    def is_ragged(self) -> bool:
        sizes = {len(self.images_a), len(self.images_b), len(self.emb_a), len(self.emb_b)}
        return len(sizes) > 1


class Provenance(str, Enum):
    """Which method proposed an attribute."""
    VLM = "vlm"
    TFIDF = "tfidf"
    VISDIFF = "visdiff"
    LLM_ONLY = "llm_only"
    MANUAL = "manual"


@dataclass
class Attribute:
    """A short visual attribute and its mean divergence over a prompt set."""

    text: str
    embedding: Optional[Embedding] = None
    mean_divergence: float = 0.0
    provenance: Provenance = Provenance.VLM
    n_prompts: int = 0
    flagged_long: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "mean_divergence": self.mean_divergence,
            "provenance": self.provenance.value,
            "n_prompts": self.n_prompts,
            "flagged_long": self.flagged_long,
        }


@dataclass
class Description:
    """A prompt description: free text plus a list of short key concepts."""

    text: str
    key_concepts: list[str] = field(default_factory=list)
    thought: str = ""
    raw: str = field(default="", repr=False)

    def as_query(self) -> str:
        """Text used to retrieve prompts by embedding similarity."""
        if not self.key_concepts:
            return self.text
        return f"{self.text} {', '.join(self.key_concepts)}".strip()

    def to_dict(self) -> dict[str, Any]:
        return {"text": self.text, "key_concepts": list(self.key_concepts), "thought": self.thought}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Description:
        return cls(
            text=data.get("text", ""),
            key_concepts=list(data.get("key_concepts", [])),
            thought=data.get("thought", ""),
        )
