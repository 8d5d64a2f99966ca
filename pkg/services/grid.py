"""Comparison grids: model A images on the top row, model B on the bottom."""
import io
import logging
from dataclasses import dataclass
from typing import Sequence

from PIL import Image

from core.exceptions import MissingRaster, PreconditionError
from core.types import ImageHandle, PromptRecord, content_hash

logger = logging.getLogger(__name__)

GRID_TAG = "grid"
STRIP_TAG = "strip"


@dataclass(frozen=True)
class GridSpec:
    """Two rows, `cell_px` square cells, one column per image of the prompt."""

    cell_px: int = 512
    rows: int = 2

    def __post_init__(self) -> None:
        if self.rows != 2:
            raise PreconditionError("Comparison grids have exactly two rows")
        if self.cell_px <= 0:
            raise PreconditionError("cell_px must be positive")


def _composite_id(tag: str, handles: Sequence[ImageHandle]) -> str:
    return content_hash(tag, *(h.id for h in handles))


def tile(rows: Sequence[Sequence[ImageHandle]], cell_px: int) -> bytes:
    """
    Tile rasters row-major into one PNG, each cell resized to cell_px square.

    Raises:
        MissingRaster: If any image has no raster
    """
    missing = [h.id for row in rows for h in row if h.raster is None]
    if missing:
        raise MissingRaster(missing)
    columns = max(len(row) for row in rows)
    canvas = Image.new("RGB", (columns * cell_px, len(rows) * cell_px), "white")
    for r, row in enumerate(rows):
        for c, handle in enumerate(row):
            with Image.open(io.BytesIO(handle.raster)) as image:
                cell = image.convert("RGB").resize((cell_px, cell_px))
            canvas.paste(cell, (c * cell_px, r * cell_px))
    buffer = io.BytesIO()
    canvas.save(buffer, format="PNG")
    return buffer.getvalue()


def build_grid(record: PromptRecord, spec: GridSpec, with_raster: bool = True) -> ImageHandle:
    """
    Composite handle for one prompt's images.

    With `with_raster` false (simulator) only the member handles are recorded.

    Raises:
        MissingRaster: If a raster is needed and absent
    """
    if not record.images_a or not record.images_b:
        raise PreconditionError(f"Record {record.id} has no images")
    members = tuple(record.images_a) + tuple(record.images_b)
    raster = tile([record.images_a, record.images_b], spec.cell_px) if with_raster else None
    return ImageHandle(
        id=_composite_id(GRID_TAG, members),
        source_prompt_id=record.id,
        model_tag="A|B",
        seed=0,
        raster=raster,
        source_prompt=record.text,
        members=members,
    )


def build_strip(images: Sequence[ImageHandle], cell_px: int, with_raster: bool = True) -> ImageHandle:
    """One-row composite of a single model's images, used for captioning."""
    if not images:
        raise PreconditionError("Cannot build a strip of zero images")
    members = tuple(images)
    raster = tile([members], cell_px) if with_raster else None
    first = members[0]
    return ImageHandle(
        id=_composite_id(STRIP_TAG, members),
        source_prompt_id=first.source_prompt_id,
        model_tag=first.model_tag,
        seed=first.seed,
        raster=raster,
        source_prompt=first.source_prompt,
        members=members,
    )
