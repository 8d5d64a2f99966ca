"""Tests for the OpenAI-compatible HTTP backends against a local aiohttp server."""
import base64
import io

import pytest
import pytest_asyncio
from aiohttp import web
from aiohttp import test_utils
from PIL import Image

from core.dto.config import BackendConfig
from core.exceptions import (
    AuthError,
    ContentRefused,
    DimMismatch,
    MalformedResponse,
    PayloadTooLarge,
    TransportError,
)
from core.types import ImageHandle, content_hash
from services.backends import http
from services.backends.http import HTTPClient, HTTPEmbeddingBackend, HTTPImageBackend, HTTPTextBackend
from services.blobs import BlobStore


def completion(text: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


class ModelService:
    """Replies to POST /v1/<path> from a per-path script; the last reply repeats."""

    def __init__(self):
        self.replies: dict[str, list[tuple[int, object]]] = {}
        self.requests: list[tuple[str, dict, str | None]] = []
        self.base_url = ""

    def script(self, path: str, *replies: tuple[int, object]) -> None:
        self.replies[path] = list(replies)

    def calls(self, path: str) -> int:
        return sum(1 for p, _, _ in self.requests if p == path)

    async def handle(self, request: web.Request) -> web.Response:
        path = request.match_info["path"]
        self.requests.append((path, await request.json(), request.headers.get("Authorization")))
        queue = self.replies[path]
        status, body = queue.pop(0) if len(queue) > 1 else queue[0]
        if isinstance(body, (dict, list)):
            return web.json_response(body, status=status)
        return web.Response(text=str(body), status=status)


@pytest_asyncio.fixture
async def service(monkeypatch):
    monkeypatch.setattr(http, "MIN_WAIT_SECONDS", 0)
    monkeypatch.setattr(http, "MAX_WAIT_SECONDS", 0)
    monkeypatch.setenv("REPDIFF_TEST_KEY", "secret")
    model_service = ModelService()
    app = web.Application()
    app.router.add_post("/v1/{path:.*}", model_service.handle)
    server = test_utils.TestServer(app)
    await server.start_server()
    model_service.base_url = str(server.make_url("/v1"))
    yield model_service
    await server.close()


def backend_config(service: ModelService, **overrides) -> BackendConfig:
    values = {"model_id": "m", "base_url": service.base_url, "api_key_env": "REPDIFF_TEST_KEY", "retry_limit": 2}
    values.update(overrides)
    return BackendConfig(**values)


def png() -> bytes:
    buffer = io.BytesIO()
    Image.new("RGB", (4, 4), "red").save(buffer, format="PNG")
    return buffer.getvalue()


async def test_text_completion(service):
    """Test a completion request carries the model, messages and bearer key."""
    service.script("chat/completions", (200, completion("hello")))
    backend = HTTPTextBackend(backend_config(service))

    try:
        assert await backend.generate_text("be brief", "hi") == "hello"
    finally:
        await backend.close()

    ((path, body, auth),) = service.requests
    assert path == "chat/completions"
    assert body["model"] == "m"
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert auth == "Bearer secret"


async def test_transient_statuses_are_retried(service):
    """Test 503 and 429 are retried until the service answers."""
    service.script("chat/completions", (503, "busy"), (429, "slow down"), (200, completion("ok")))
    backend = HTTPTextBackend(backend_config(service))

    try:
        assert await backend.generate_text("", "hi") == "ok"
    finally:
        await backend.close()

    assert service.calls("chat/completions") == 3


async def test_retry_limit_surfaces_transport_error(service):
    """Test a persistent 5xx fails after retry_limit retries."""
    service.script("chat/completions", (502, "bad gateway"))
    client = HTTPClient(backend_config(service, retry_limit=2))

    try:
        with pytest.raises(TransportError) as exc:
            await client.post("chat/completions", {"model": "m"})
    finally:
        await client.close()

    assert exc.value.status == 502
    assert service.calls("chat/completions") == 3


@pytest.mark.parametrize(
    "status,error",
    [(401, AuthError), (403, AuthError), (413, PayloadTooLarge), (404, TransportError), (400, TransportError)],
)
async def test_client_errors_fail_without_retry(service, status, error):
    """Test 4xx statuses map to their error and are not retried."""
    service.script("chat/completions", (status, "nope"))
    client = HTTPClient(backend_config(service))

    try:
        with pytest.raises(error):
            await client.post("chat/completions", {"model": "m"})
    finally:
        await client.close()

    assert service.calls("chat/completions") == 1


async def test_content_policy_rejection(service):
    """Test a policy 400 raises ContentRefused for the prompt, also through the image backend."""
    refusal = {"error": {"code": "content_policy_violation", "message": "rejected"}}
    service.script("images/generations", (400, refusal))
    client = HTTPClient(backend_config(service))
    backend = HTTPImageBackend(backend_config(service), BlobStore("unused"))

    try:
        with pytest.raises(ContentRefused) as exc:
            await client.post("images/generations", {"prompt": "a dog"}, prompt="a dog")
        with pytest.raises(ContentRefused):
            await backend.synthesize_images("a dog", "A", 1, [0])
    finally:
        await client.close()
        await backend.close()

    assert exc.value.prompt == "a dog"
    assert service.calls("images/generations") == 2


async def test_non_json_body_is_malformed(service):
    """Test a 200 response that is not JSON raises MalformedResponse."""
    service.script("chat/completions", (200, "<html>gateway page</html>"))
    backend = HTTPTextBackend(backend_config(service))

    try:
        with pytest.raises(MalformedResponse):
            await backend.generate_text("", "hi")
    finally:
        await backend.close()


async def test_empty_completion_is_malformed(service):
    """Test a completion without text raises MalformedResponse."""
    service.script("chat/completions", (200, {"choices": []}))
    backend = HTTPTextBackend(backend_config(service))

    try:
        with pytest.raises(MalformedResponse):
            await backend.generate_text("", "hi")
    finally:
        await backend.close()


async def test_image_synthesis_stores_blob(service, tmp_path):
    """Test a generated raster is stored under its digest and attached to the handle."""
    raster = png()
    service.script("images/generations", (200, {"data": [{"b64_json": base64.b64encode(raster).decode()}]}))
    blobs = BlobStore(tmp_path)
    backend = HTTPImageBackend(backend_config(service, image_size="256x256"), blobs)

    try:
        (handle,) = await backend.synthesize_images("a dog", "A", 1, [7])
    finally:
        await backend.close()

    assert handle.id == content_hash(raster)
    assert handle.raster == raster
    assert handle.seed == 7
    assert blobs.get(handle.id) == raster
    ((_, body, _),) = service.requests
    assert body["size"] == "256x256"
    assert body["seed"] == 7


async def test_embeddings_are_normalized_and_checked(service):
    """Test vectors are L2-normalized and a dimension change mid-run raises DimMismatch."""
    service.script("embeddings", (200, {"data": [{"embedding": [3.0, 4.0]}]}), (200, {"data": [{"embedding": [1.0, 0.0, 0.0]}]}))
    backend = HTTPEmbeddingBackend(backend_config(service))

    try:
        first = await backend.embed("a dog")
        with pytest.raises(DimMismatch) as exc:
            await backend.embed("a cat")
    finally:
        await backend.close()

    assert first.to_list() == pytest.approx([0.6, 0.8])
    assert (exc.value.expected, exc.value.actual) == (2, 3)


async def test_image_embedding_sends_data_url(service):
    """Test images are embedded as base64 data URLs."""
    raster = png()
    service.script("embeddings", (200, {"data": [{"embedding": [1.0, 1.0]}]}))
    backend = HTTPEmbeddingBackend(backend_config(service))
    image = ImageHandle(id=content_hash(raster), source_prompt_id="p", model_tag="A", seed=0, raster=raster)

    try:
        await backend.embed(image)
    finally:
        await backend.close()

    ((_, body, _),) = service.requests
    assert body["input"] == http.data_url(raster)
