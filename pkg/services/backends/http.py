"""Backends for OpenAI-compatible HTTP services."""
import asyncio
import base64
import logging
from typing import Any, Optional

import aiohttp
from tenacity import AsyncRetrying, retry_if_exception, stop_after_attempt, wait_exponential

from core.dto.config import BackendConfig, BackendsConfig
from core.exceptions import (
    AuthError,
    ContentRefused,
    MalformedResponse,
    PayloadTooLarge,
    TransportError,
)
from core.types import ImageHandle, prompt_id
from services.backends.base import BackendSuite, EmbeddingBackend, ImageBackend, Message, TextBackend, VisionBackend
from services.blobs import BlobStore
from services.cache import CacheStore

logger = logging.getLogger(__name__)

MIN_WAIT_SECONDS = 1
MAX_WAIT_SECONDS = 30
CONTENT_POLICY_MARKERS = ("content_policy", "safety", "moderation")


class TransientHTTPError(TransportError):
    """429, 5xx or timeout; retried before surfacing as TransportError."""


def _is_transient(exc: BaseException) -> bool:
    return isinstance(exc, (TransientHTTPError, aiohttp.ClientConnectionError, asyncio.TimeoutError))


def data_url(raster: bytes, mime: str = "image/png") -> str:
    return f"data:{mime};base64,{base64.b64encode(raster).decode('ascii')}"


class HTTPClient:
    """
    JSON POST client with status classification and retries.

    Transient failures are retried with exponential backoff up to
    `retry_limit` times; other 4xx responses fail immediately.
    """

    def __init__(self, config: BackendConfig):
        self.config = config
        self._session: Optional[aiohttp.ClientSession] = None

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = self.config.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    async def session(self) -> aiohttp.ClientSession:
        if self._session is None or self._session.closed:
            timeout = aiohttp.ClientTimeout(total=self.config.timeout_ms / 1000)
            self._session = aiohttp.ClientSession(timeout=timeout, headers=self._headers())
        return self._session

    async def close(self) -> None:
        if self._session is not None and not self._session.closed:
            await self._session.close()

    async def post(self, path: str, body: dict[str, Any], prompt: str = "") -> dict[str, Any]:
        """
        POST a JSON body and return the decoded JSON response.

        Raises:
            AuthError: 401/403
            PayloadTooLarge: 413
            ContentRefused: content-policy rejection of a prompt
            TransportError: Other HTTP errors, or transient ones after all retries
            MalformedResponse: Body is not JSON
        """
        url = f"{self.config.base_url.rstrip('/')}/{path.lstrip('/')}"
        try:
            async for attempt in AsyncRetrying(
                retry=retry_if_exception(_is_transient),
                stop=stop_after_attempt(self.config.retry_limit + 1),
                wait=wait_exponential(multiplier=1, min=MIN_WAIT_SECONDS, max=MAX_WAIT_SECONDS),
                reraise=True,
            ):
                with attempt:
                    number = attempt.retry_state.attempt_number
                    if number > 1:
                        logger.warning(f"Retrying {path} (attempt {number})", extra={"operation": path})
                    return await self._post_once(url, body, prompt)
        except TransientHTTPError as e:
            raise TransportError(f"{path} failed after {self.config.retry_limit} retries: {e.message}", status=e.status)
        except (aiohttp.ClientConnectionError, asyncio.TimeoutError) as e:
            raise TransportError(f"{path} unreachable after {self.config.retry_limit} retries: {e!r}")
        raise TransportError(f"{path} returned no response")

    async def _post_once(self, url: str, body: dict[str, Any], prompt: str) -> dict[str, Any]:
        session = await self.session()
        async with session.post(url, json=body) as response:
            status = response.status
            text = await response.text()
            if status == 429 or status >= 500:
                raise TransientHTTPError(f"HTTP {status}", status=status)
            if status in (401, 403):
                raise AuthError(f"HTTP {status} from {url}", status=status)
            if status == 413:
                raise PayloadTooLarge(f"HTTP 413 from {url}", status=status)
            if status == 400 and any(marker in text.lower() for marker in CONTENT_POLICY_MARKERS):
                raise ContentRefused(prompt, text[:200])
            if status >= 400:
                raise TransportError(f"HTTP {status}: {text[:200]}", status=status)
            try:
                return await response.json(content_type=None)
            except ValueError:
                raise MalformedResponse(f"Non-JSON body from {url}")


class HTTPTextBackend(TextBackend):
    """/chat/completions"""

    def __init__(self, config: BackendConfig, cache: Optional[CacheStore] = None):
        super().__init__(config, cache)
        self.client = HTTPClient(config)

    async def _complete(
        self,
        messages: list[Message],
        temperature: float,
        purpose: str,
        context: dict[str, Any],
    ) -> str:
        body: dict[str, Any] = {"model": self.model_id, "messages": messages, "temperature": temperature}
        if self.config.seed is not None:
            body["seed"] = self.config.seed
        data = await self.client.post("chat/completions", body)
        return _message_text(data)

    async def close(self) -> None:
        await self.client.close()


class HTTPVisionBackend(VisionBackend):
    """/chat/completions with an image_url content part."""

    def __init__(self, config: BackendConfig, cache: Optional[CacheStore] = None):
        super().__init__(config, cache)
        self.client = HTTPClient(config)

    async def _describe(self, grid: ImageHandle, instruction: str, temperature: float, purpose: str) -> str:
        content = [
            {"type": "text", "text": instruction},
            {"type": "image_url", "image_url": {"url": data_url(grid.raster or b"")}},
        ]
        body = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": content}],
            "temperature": temperature,
        }
        data = await self.client.post("chat/completions", body)
        return _message_text(data)

    async def close(self) -> None:
        await self.client.close()


class HTTPImageBackend(ImageBackend):
    """/images/generations; rasters go to the blob store and the handle id is their digest."""

    def __init__(self, config: BackendConfig, blobs: BlobStore, cache: Optional[CacheStore] = None):
        super().__init__(config, cache)
        self.client = HTTPClient(config)
        self.blobs = blobs

    async def _synthesize(self, prompt: str, model_tag: str, seed: int) -> ImageHandle:
        body = {
            "model": self.model_id,
            "prompt": prompt,
            "n": 1,
            "size": self.config.image_size,
            "seed": seed,
            "response_format": "b64_json",
        }
        data = await self.client.post("images/generations", body, prompt=prompt)
        try:
            raster = base64.b64decode(data["data"][0]["b64_json"])
        except (KeyError, IndexError, TypeError, ValueError):
            raise MalformedResponse("Image response contained no b64_json payload")
        blob_id = self.blobs.put(raster)
        return ImageHandle(
            id=blob_id,
            source_prompt_id=prompt_id(prompt),
            model_tag=model_tag,
            seed=seed,
            raster=raster,
            source_prompt=prompt,
        )

    def _restore(self, handle: ImageHandle) -> ImageHandle:
        raster = self.blobs.get(handle.id)
        if raster is None:
            raise KeyError(f"blob {handle.id[:12]} missing")
        return handle.with_raster(raster)

    async def close(self) -> None:
        await self.client.close()


class HTTPEmbeddingBackend(EmbeddingBackend):
    """/embeddings; images are sent as base64 data URLs."""

    def __init__(self, config: BackendConfig, cache: Optional[CacheStore] = None):
        super().__init__(config, cache)
        self.client = HTTPClient(config)

    async def _request(self, item: str) -> list[float]:
        data = await self.client.post("embeddings", {"model": self.model_id, "input": item})
        try:
            vector = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("Embedding response contained no vector")
        if not isinstance(vector, list) or not vector:
            raise MalformedResponse("Embedding vector is empty")
        return [float(x) for x in vector]

    async def _embed_text(self, text: str) -> list[float]:
        return await self._request(text)

    async def _embed_image(self, image: ImageHandle) -> list[float]:
        if image.raster is None:
            raise PayloadTooLarge(f"Image {image.id[:12]} has no raster to embed")
        return await self._request(data_url(image.raster))

    async def close(self) -> None:
        await self.client.close()


def _message_text(data: dict[str, Any]) -> str:
    try:
        content = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse("Completion response contained no message")
    if not isinstance(content, str) or not content.strip():
        raise MalformedResponse("Completion message is empty")
    return content


def build_http_suite(config: BackendsConfig, blobs: BlobStore, cache: Optional[CacheStore] = None) -> BackendSuite:
    """Backends for live runs."""
    return BackendSuite(
        text=HTTPTextBackend(config.text, cache),
        vision=HTTPVisionBackend(config.vision, cache),
        embedding=HTTPEmbeddingBackend(config.embedding, cache),
        images={
            "A": HTTPImageBackend(config.image_a, blobs, cache),
            "B": HTTPImageBackend(config.image_b, blobs, cache),
        },
    )
