"""Tests for comparison grids, the blob store and HTTP payload helpers."""
import asyncio
import base64
import io

import aiohttp
import pytest
from PIL import Image

from core.exceptions import MalformedResponse, MissingRaster, PreconditionError, TransportError
from core.types import ImageHandle, PromptRecord
from services.backends.http import TransientHTTPError, _is_transient, _message_text, data_url
from services.blobs import BlobStore
from services.grid import GridSpec, build_grid, build_strip, tile


def png(color: str, size: int = 8) -> bytes:
    buffer = io.BytesIO()
    Image.new("RGB", (size, size), color).save(buffer, format="PNG")
    return buffer.getvalue()


def handle(tag: str, seed: int, raster: bytes | None) -> ImageHandle:
    return ImageHandle(
        id=f"{tag}-{seed}",
        source_prompt_id="p",
        model_tag=tag,
        seed=seed,
        raster=raster,
        source_prompt="a dog",
    )


@pytest.fixture
def record() -> PromptRecord:
    rec = PromptRecord.from_text("a dog")
    rec.images_a = [handle("A", s, png("red")) for s in range(3)]
    rec.images_b = [handle("B", s, png("blue", 16)) for s in range(3)]
    return rec


def test_grid_spec_rejects_bad_shape():
    """Test grids have two rows and a positive cell size."""
    with pytest.raises(PreconditionError):
        GridSpec(rows=3)
    with pytest.raises(PreconditionError):
        GridSpec(cell_px=0)


def test_grid_layout(record):
    """Test model A fills the top row and model B the bottom row."""
    composite = build_grid(record, GridSpec(cell_px=10))

    with Image.open(io.BytesIO(composite.raster)) as image:
        assert image.size == (30, 20)
        assert image.convert("RGB").getpixel((25, 5)) == (255, 0, 0)
        assert image.convert("RGB").getpixel((5, 15)) == (0, 0, 255)
    assert composite.model_tag == "A|B"
    assert len(composite.members) == 6


def test_grid_id_depends_on_members_only(record):
    """Test the composite id is stable and ignores whether a raster was built."""
    with_raster = build_grid(record, GridSpec(cell_px=10))
    without = build_grid(record, GridSpec(cell_px=10), with_raster=False)

    assert with_raster.id == without.id
    assert without.raster is None


def test_grid_missing_raster(record):
    """Test tiling images without rasters names the missing images."""
    record.images_b[1] = handle("B", 1, None)

    with pytest.raises(MissingRaster) as exc:
        build_grid(record, GridSpec(cell_px=10))

    assert exc.value.image_ids == ["B-1"]


def test_grid_without_images():
    """Test a record with no images cannot be gridded."""
    with pytest.raises(PreconditionError):
        build_grid(PromptRecord.from_text("empty"), GridSpec())


def test_strip_single_row(record):
    """Test a strip tiles one model's images in one row."""
    strip = build_strip(record.images_b, cell_px=4)

    with Image.open(io.BytesIO(strip.raster)) as image:
        assert image.size == (12, 4)
    assert strip.model_tag == "B"
    with pytest.raises(PreconditionError):
        build_strip([], cell_px=4)


def test_tile_pads_short_rows():
    """Test rows shorter than the widest one leave white cells."""
    raster = tile([[handle("A", 0, png("black"))], [handle("B", 0, png("black")), handle("B", 1, png("black"))]], 2)

    with Image.open(io.BytesIO(raster)) as image:
        assert image.size == (4, 4)
        assert image.convert("RGB").getpixel((3, 0)) == (255, 255, 255)


def test_blob_store_is_content_addressed(tmp_path):
    """Test equal bytes share one file and unknown ids read as None."""
    store = BlobStore(tmp_path)
    data = png("green")

    first = store.put(data)
    second = store.put(data)

    assert first == second
    assert store.get(first) == data
    assert store.path_for(first).parent.name == first[:2]
    assert store.get("0" * 64) is None
    assert not store.exists("0" * 64)


def test_data_url():
    """Test rasters are embedded as base64 data URLs."""
    url = data_url(b"\x89PNG")

    assert url.startswith("data:image/png;base64,")
    assert base64.b64decode(url.split(",", 1)[1]) == b"\x89PNG"


def test_message_text():
    """Test completion content is extracted and empty content rejected."""
    assert _message_text({"choices": [{"message": {"content": "hello"}}]}) == "hello"
    with pytest.raises(MalformedResponse):
        _message_text({"choices": []})
    with pytest.raises(MalformedResponse):
        _message_text({"choices": [{"message": {"content": "  "}}]})


def test_transient_classification():
    """Test only rate limits, server errors and connection failures are retried."""
    assert _is_transient(TransientHTTPError("HTTP 503", status=503))
    assert _is_transient(aiohttp.ClientConnectionError())
    assert _is_transient(asyncio.TimeoutError())
    assert not _is_transient(TransportError("HTTP 404", status=404))
    assert not _is_transient(MalformedResponse())
