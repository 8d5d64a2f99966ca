"""Append-only run journal (one JSON event per line)."""
import asyncio
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterator, Optional

from core.exceptions import StorageError

logger = logging.getLogger(__name__)

CALL = "call"
ATTRIBUTE_DONE = "attribute_done"
ATTRIBUTE_FAILED = "attribute_failed"
RUN_STARTED = "run_started"
RUN_FINISHED = "run_finished"


class RunJournal:
    """
    Append-only event log with a single serialized appender.

    Each backend request/response computed on a cache miss is written once as
    a "call" event; the pipeline adds progress events so an interrupted run
    can resume. Without a path the journal only keeps events in memory.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self._lock = asyncio.Lock()
        self._memory: list[dict[str, Any]] = []
        self._seq = 0
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                self._repair_tail()
                self._seq = sum(1 for _ in self.replay())
                logger.info(f"Journal {self.path} reopened with {self._seq} events")
            else:
                self.path.touch()

    def _repair_tail(self) -> None:
        """Drop a partial last line left by a process killed mid-write."""
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            cut = data.rfind(b"\n") + 1
            logger.warning(f"Truncating partial journal record ({len(data) - cut} bytes) in {self.path}")
            with open(self.path, "r+b") as f:
                f.truncate(cut)

    async def append(self, kind: str, **fields: Any) -> dict[str, Any]:
        """
        Append one event.

        Args:
            kind: Event kind (call, attribute_done, ...)
            **fields: JSON-serializable event payload

        Returns:
            The written event including its sequence number
        """
        async with self._lock:
            event = {"seq": self._seq, "kind": kind, **fields}
            line = json.dumps(event, sort_keys=True, ensure_ascii=False)
            if self.path:
                try:
                    with open(self.path, "a", encoding="utf-8") as f:
                        f.write(line + "\n")
                        f.flush()
                        os.fsync(f.fileno())
                except OSError as e:
                    raise StorageError(f"Cannot append to journal {self.path}: {e}")
            else:
                self._memory.append(event)
            self._seq += 1
            return event

    def replay(self) -> Iterator[dict[str, Any]]:
        """Yield events in write order."""
        if not self.path:
            yield from list(self._memory)
            return
        with open(self.path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    logger.warning(f"Skipping unreadable journal line {line_no} in {self.path}")

    def events(self, kind: str) -> list[dict[str, Any]]:
        return [e for e in self.replay() if e.get("kind") == kind]

    def completed_attributes(self) -> dict[str, dict[str, Any]]:
        """Attributes whose search finished, mapped to their completion event."""
        return {e["attribute"]: e for e in self.events(ATTRIBUTE_DONE)}

    def __len__(self) -> int:
        return self._seq
