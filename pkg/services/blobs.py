"""Content-addressed image files."""
import logging
from pathlib import Path
from typing import Optional

from core.exceptions import StorageError
from core.types import content_hash

logger = logging.getLogger(__name__)


class BlobStore:
    """Stores raster bytes under their SHA-256 digest."""

    def __init__(self, root: str | Path, suffix: str = ".png"):
        self.root = Path(root)
        self.suffix = suffix

    def path_for(self, blob_id: str) -> Path:
        return self.root / blob_id[:2] / f"{blob_id}{self.suffix}"

    def put(self, data: bytes) -> str:
        """
        Store bytes and return their id.

        Writing the same bytes twice is a no-op.
        """
        blob_id = content_hash(data)
        path = self.path_for(blob_id)
        if path.exists():
            return blob_id
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        except OSError as e:
            raise StorageError(f"Cannot write blob {blob_id[:12]}: {e}")
        logger.debug(f"Stored blob {blob_id[:12]} ({len(data)} bytes)")
        return blob_id

    def get(self, blob_id: str) -> Optional[bytes]:
        path = self.path_for(blob_id)
        if not path.exists():
            return None
        return path.read_bytes()

    def exists(self, blob_id: str) -> bool:
        return self.path_for(blob_id).exists()
