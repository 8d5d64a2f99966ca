"""Planted-truth world driving the offline simulator."""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from core.dto.dataset import RepresentationSpec
from core.exceptions import ConfigError, InvalidSize
from core.types import content_hash

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"
SYLLABLES = [c + v for c in CONSONANTS for v in VOWELS]
WORD_SYLLABLES = 3

TOKEN_PATTERN = re.compile(r"[a-z0-9]+")


def _word(code: int) -> str:
    parts = []
    for _ in range(WORD_SYLLABLES):
        code, digit = divmod(code, len(SYLLABLES))
        parts.append(SYLLABLES[digit])
    return "".join(parts)


def stable_int(text: str) -> int:
    """Process-independent 60-bit integer of a string (unlike hash())."""
    return int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:15], 16)


def tokenize(text: str) -> list[str]:
    return TOKEN_PATTERN.findall(text.lower())


@dataclass(frozen=True)
class SimPrompt:
    """A prompt as a multiset of vocabulary tokens."""

    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_text(cls, text: str) -> SimPrompt:
        tokens = tuple(text.split())
        if not tokens:
            raise InvalidSize("A sim prompt needs at least one token")
        return cls(tokens)


class SimWorld(BaseModel):
    """
    Vocabulary with a hidden rule: model A renders `attribute_token` whenever a
    prompt contains at least `trigger_min` concept tokens; model B never does.
    """

    vocab: list[str]
    concepts: list[str]
    attribute_token: str
    trigger_min: int = Field(1, ge=1)
    attribute_weight: float = Field(1.0, gt=0.0)
    noise_sigma: float = Field(0.0, ge=0.0)
    proposal_error_rate: float = Field(0.0, ge=0.0, le=1.0)
    description_error_rate: float = Field(0.0, ge=0.0, le=1.0)
    concept_rate: float = Field(0.25, ge=0.0, le=1.0, description="Share of drawn prompts carrying concepts")
    prompt_length: int = Field(6, ge=2)
    distractor_count: int = Field(2, ge=0, description="Spurious attributes per proposal")
    describe_top_j: int = Field(3, ge=1)
    filler_count: int = Field(4, ge=0)
    rng_seed: int = 0

    @model_validator(mode="after")
    def check_world(self) -> "SimWorld":
        vocab = set(self.vocab)
        if len(vocab) != len(self.vocab):
            raise ValueError("vocab tokens must be distinct")
        if not set(self.concepts) <= vocab:
            raise ValueError("concepts must be vocabulary tokens")
        if self.attribute_token not in vocab or self.attribute_token in self.concepts:
            raise ValueError("attribute_token must be a non-concept vocabulary token")
        if self.trigger_min > len(self.concepts):
            raise ValueError("trigger_min cannot exceed the number of concepts")
        if len(self.neutral) < self.prompt_length:
            raise ValueError("vocabulary too small for the prompt length")
        return self

    @cached_property
    def index(self) -> dict[str, int]:
        return {token: i for i, token in enumerate(self.vocab)}

    @cached_property
    def neutral(self) -> list[str]:
        """Tokens that are neither concepts nor the attribute."""
        excluded = set(self.concepts) | {self.attribute_token}
        return [t for t in self.vocab if t not in excluded]

    @property
    def dim(self) -> int:
        # one extra slot collects out-of-vocabulary tokens
        return len(self.vocab) + 1

    @property
    def unknown_index(self) -> int:
        return len(self.vocab)

    def token_index(self, token: str) -> int:
        return self.index.get(token, self.unknown_index)

    def concept_hits(self, text: str) -> int:
        return len(set(tokenize(text)) & set(self.concepts))

    def triggers(self, text: str) -> bool:
        return self.concept_hits(text) >= self.trigger_min

    def rng(self, operation: str, key: str) -> np.random.Generator:
        """Independent stream per (operation, key), so results ignore call order."""
        return np.random.default_rng([self.rng_seed, stable_int(operation), stable_int(key)])

    def fingerprint(self) -> str:
        return content_hash(self.model_dump_json())[:12]

    def spec(self) -> RepresentationSpec:
        """The planted representation in benchmark form."""
        return RepresentationSpec(attribute=self.attribute_token, concepts=list(self.concepts), category="manual")

    def save(self, path: str | Path) -> None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SimWorld":
        try:
            return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"World file not found: {path}")
        except ValidationError as e:
            raise ConfigError(f"Invalid world file {path}: {e.error_count()} error(s)")


def make_world(
    v_size: int,
    c_size: int,
    seed: int,
    error_rate: float = 0.0,
    noise: float = 0.0,
    **overrides,
) -> SimWorld:
    """
    Build a deterministic world.

    Args:
        v_size: Vocabulary size (at least 10)
        c_size: Number of concept tokens (less than v_size)
        seed: World seed
        error_rate: Probability that a proposal replaces the attribute by a random token
        noise: Gaussian jitter added to image embeddings
        **overrides: Any other SimWorld field

    Raises:
        InvalidSize: If the sizes are inconsistent
    """
    if v_size < 10 or c_size < 1 or c_size >= v_size:
        raise InvalidSize(f"Invalid world size: vocab={v_size}, concepts={c_size}")
    if not 0.0 <= error_rate <= 1.0:
        raise InvalidSize(f"Error rate must lie in [0, 1], got {error_rate}")

    rng = np.random.default_rng(seed)
    codes = rng.choice(len(SYLLABLES) ** WORD_SYLLABLES, size=v_size, replace=False)
    vocab = [_word(int(code)) for code in codes]
    picks = rng.choice(v_size, size=c_size + 1, replace=False)
    concepts = [vocab[int(i)] for i in picks[:c_size]]
    attribute = vocab[int(picks[c_size])]

    fields = dict(
        vocab=vocab,
        concepts=concepts,
        attribute_token=attribute,
        noise_sigma=noise,
        proposal_error_rate=error_rate,
        rng_seed=seed,
    )
    fields.update(overrides)
    try:
        return SimWorld(**fields)
    except ValidationError as e:
        raise InvalidSize(f"Invalid world: {e.errors()[0]['msg']}")


def _draw_prompt(world: SimWorld, rng: np.random.Generator) -> str:
    length = world.prompt_length
    if rng.random() < world.concept_rate:
        k = int(rng.integers(world.trigger_min, len(world.concepts) + 1))
    else:
        k = int(rng.integers(0, world.trigger_min))
    k = min(k, length - 1)
    chosen = [str(t) for t in rng.choice(world.concepts, size=k, replace=False)] if k else []
    filler = [str(t) for t in rng.choice(world.neutral, size=length - k, replace=False)]
    tokens = chosen + filler
    rng.shuffle(tokens)
    return " ".join(tokens)


def sim_prompts(world: SimWorld, n: int, seed: int = 0) -> list[str]:
    """
    Draw n distinct prompts from the world.

    A share `concept_rate` of prompts carries enough concept tokens to trigger
    the hidden rule; the rest carry fewer.
    """
    rng = world.rng("prompts", str(seed))
    prompts: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(prompts) < n:
        attempts += 1
        if attempts > 50 * n:
            raise InvalidSize(f"Cannot draw {n} distinct prompts from this world")
        text = _draw_prompt(world, rng)
        if text not in seen:
            seen.add(text)
            prompts.append(text)
    return prompts


def trigger_rate(world: SimWorld, prompts: list[str]) -> float:
    """Fraction of prompts that fire the hidden rule."""
    if not prompts:
        return 0.0
    return sum(world.triggers(p) for p in prompts) / len(prompts)
