"""
Backend interfaces for the four model capabilities.

Concrete backends implement the underscore hooks; the public methods check
preconditions, bound parallelism and route every call through the response
cache.
"""
import asyncio
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Optional, TypeVar

from core.dto.config import BackendConfig
from core.exceptions import ContentRefused, DimMismatch, MalformedResponse, PreconditionError
from core.types import Embedding, ImageHandle, prompt_id
from services.cache import CacheStore, make_key

logger = logging.getLogger(__name__)

T = TypeVar("T")

# judging and dedup must be reproducible, everything else samples at the configured temperature
DETERMINISTIC_PURPOSES = frozenset({"dedup", "judge_attribute", "judge_description"})

Message = dict[str, str]


def _as_text(value: Any) -> str:
    if not isinstance(value, str):
        raise TypeError("cached response is not text")
    return value


class Backend(ABC):
    """Shared machinery: parallelism bound, instrumentation and caching."""

    kind: str = "backend"

    def __init__(self, config: BackendConfig, cache: Optional[CacheStore] = None):
        self.config = config
        self.cache = cache
        self._semaphore = asyncio.Semaphore(config.max_parallel)
        self.in_flight = 0
        self.peak_in_flight = 0
        self.calls = 0

    @property
    def model_id(self) -> str:
        return self.config.model_id

    def temperature_for(self, purpose: str) -> float:
        if purpose in DETERMINISTIC_PURPOSES:
            return 0.0
        return self.config.temperature

    async def _bounded(self, call: Callable[[], Awaitable[T]]) -> T:
        async with self._semaphore:
            self.in_flight += 1
            self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            self.calls += 1
            try:
                return await call()
            finally:
                self.in_flight -= 1

    async def _cached(
        self,
        operation: str,
        payload: dict[str, Any],
        compute: Callable[[], Awaitable[Any]],
        decode: Callable[[Any], T],
    ) -> T:
        if self.cache is None:
            value = await self._bounded(compute)
            return decode(json.loads(json.dumps(value)))
        key = make_key(self.model_id, operation, payload)
        return await self.cache.get_or_compute(
            key,
            lambda: self._bounded(compute),
            model_id=self.model_id,
            operation=operation,
            decode=decode,
            request=payload,
        )

    async def close(self) -> None:
        """Release network resources; no-op unless overridden."""


class TextBackend(Backend):
    """Text generation (single turn or conversation)."""

    kind = "text"

    async def generate_text(
        self,
        system_prompt: str,
        user_prompt: str,
        *,
        purpose: str = "generate",
        context: Optional[dict[str, Any]] = None,
        attempt: int = 0,
    ) -> str:
        """
        Complete a single user prompt.

        Args:
            system_prompt: Optional system message (may be empty)
            user_prompt: Non-empty user message
            purpose: Call purpose; judging and dedup run at temperature 0
            context: Structured inputs the simulator answers from
            attempt: Retry counter after parse failures, part of the cache key

        Raises:
            PreconditionError: If user_prompt is empty
        """
        if not user_prompt or not user_prompt.strip():
            raise PreconditionError("user_prompt must be non-empty")
        messages: list[Message] = []
        if system_prompt:
            messages.append({"role": "system", "content": system_prompt})
        messages.append({"role": "user", "content": user_prompt})
        return await self.chat(messages, purpose=purpose, context=context, attempt=attempt)

    async def chat(
        self,
        messages: list[Message],
        *,
        purpose: str = "generate",
        context: Optional[dict[str, Any]] = None,
        attempt: int = 0,
    ) -> str:
        """Complete a conversation whose last message is from the user."""
        if not messages or messages[-1].get("role") != "user" or not messages[-1].get("content", "").strip():
            raise PreconditionError("Conversation must end with a non-empty user message")
        temperature = self.temperature_for(purpose)
        payload = {
            "messages": messages,
            "temperature": temperature,
            "seed": self.config.seed,
            "attempt": attempt,
        }

        async def compute() -> str:
            text = await self._complete(messages, temperature, purpose, context or {})
            if not isinstance(text, str) or not text:
                raise MalformedResponse("Completion contained no text")
            return text

        return await self._cached("chat", payload, compute, _as_text)

    @abstractmethod
    async def _complete(
        self,
        messages: list[Message],
        temperature: float,
        purpose: str,
        context: dict[str, Any],
    ) -> str:
        ...


class VisionBackend(Backend):
    """Free-text description of an image (typically a comparison grid)."""

    kind = "vision"
    requires_raster: bool = True

    async def describe_image_grid(
        self,
        grid: ImageHandle,
        instruction: str,
        *,
        purpose: str = "propose",
    ) -> str:
        """
        Describe a grid according to an instruction.

        Raises:
            PreconditionError: If the instruction is empty, or the backend needs
                a raster and the grid has none
        """
        if not instruction.strip():
            raise PreconditionError("instruction must be non-empty")
        if self.requires_raster and grid.raster is None:
            raise PreconditionError(f"Grid {grid.id[:12]} has no raster payload")
        temperature = self.temperature_for(purpose)
        payload = {"grid": grid.id, "instruction": instruction, "temperature": temperature}

        async def compute() -> str:
            text = await self._describe(grid, instruction, temperature, purpose)
            if not isinstance(text, str) or not text:
                raise MalformedResponse("Grid description contained no text")
            return text

        return await self._cached("describe", payload, compute, _as_text)

    @abstractmethod
    async def _describe(self, grid: ImageHandle, instruction: str, temperature: float, purpose: str) -> str:
        ...


class ImageBackend(Backend):
    """Text-to-image synthesis for one model."""

    kind = "image"

    async def synthesize_images(self, prompt: str, model_tag: str, n: int, seeds: list[int]) -> list[ImageHandle]:
        """
        Generate n images of a prompt, one per seed.

        Raises:
            PreconditionError: If n < 1, len(seeds) != n or the prompt is empty
            ContentRefused: If the service refuses the prompt (refusals are cached)
        """
        if n < 1:
            raise PreconditionError(f"n must be positive, got {n}")
        if len(seeds) != n:
            raise PreconditionError(f"Expected {n} seeds, got {len(seeds)}")
        if not prompt.strip():
            raise PreconditionError("prompt must be non-empty")
        return list(await asyncio.gather(*(self._one(prompt, model_tag, seed) for seed in seeds)))

    async def _one(self, prompt: str, model_tag: str, seed: int) -> ImageHandle:
        payload = {"prompt": prompt, "model_tag": model_tag, "seed": seed, "size": self.config.image_size}

        async def compute() -> dict[str, Any]:
            try:
                handle = await self._synthesize(prompt, model_tag, seed)
            except ContentRefused as e:
                logger.warning(f"Synthesis refused for prompt {prompt_id(prompt)}: {e.reason}")
                return {"refused": True, "reason": e.reason}
            return {"handle": handle.to_dict()}

        def decode(value: dict[str, Any]) -> ImageHandle:
            if value.get("refused"):
                raise ContentRefused(prompt, value.get("reason"))
            return self._restore(ImageHandle.from_dict(value["handle"]))

        return await self._cached("synthesize", payload, compute, decode)

    def _restore(self, handle: ImageHandle) -> ImageHandle:
        """Reattach stored payloads to a cached handle; KeyError marks the entry corrupted."""
        return handle

    @abstractmethod
    async def _synthesize(self, prompt: str, model_tag: str, seed: int) -> ImageHandle:
        ...


class EmbeddingBackend(Backend):
    """Joint text/image embedding; every returned vector is L2-normalized."""

    kind = "embedding"

    def __init__(self, config: BackendConfig, cache: Optional[CacheStore] = None):
        super().__init__(config, cache)
        self.dim: Optional[int] = None

    async def embed(self, payload: str | ImageHandle) -> Embedding:
        """
        Embed a text or an image.

        Raises:
            PreconditionError: If a text payload is empty
            DimMismatch: If the dimension differs from earlier embeddings of the run
        """
        if isinstance(payload, ImageHandle):
            image = payload
            operation = "embed_image"
            request: dict[str, Any] = {"image": image.id}

            async def compute() -> list[float]:
                return Embedding.from_vector(await self._embed_image(image)).to_list()
        else:
            text = payload
            if not text or not text.strip():
                raise PreconditionError("Cannot embed empty text")
            operation = "embed_text"
            request = {"text": text}

            async def compute() -> list[float]:
                return Embedding.from_vector(await self._embed_text(text)).to_list()

        embedding = await self._cached(operation, request, compute, Embedding.from_list)
        self._check_dim(embedding)
        return embedding

    async def embed_many(self, payloads: list[str] | list[ImageHandle]) -> list[Embedding]:
        return list(await asyncio.gather(*(self.embed(p) for p in payloads)))

    def _check_dim(self, embedding: Embedding) -> None:
        if self.dim is None:
            self.dim = embedding.dim
        elif embedding.dim != self.dim:
            raise DimMismatch(self.dim, embedding.dim)

    @abstractmethod
    async def _embed_text(self, text: str) -> list[float]:
        ...

    @abstractmethod
    async def _embed_image(self, image: ImageHandle) -> list[float]:
        ...


@dataclass
class BackendSuite:
    """The backends one run uses; image backends are keyed by model tag."""

    text: TextBackend
    vision: VisionBackend
    embedding: EmbeddingBackend
    images: dict[str, ImageBackend] = field(default_factory=dict)

    def image(self, model_tag: str) -> ImageBackend:
        try:
            return self.images[model_tag]
        except KeyError:
            raise PreconditionError(f"No image backend for model '{model_tag}'")

    def all(self) -> list[Backend]:
        return [self.text, self.vision, self.embedding, *self.images.values()]

    def total_calls(self) -> int:
        return sum(b.calls for b in self.all())

    async def close(self) -> None:
        for backend in self.all():
            await backend.close()
