"""Prompt records: synthesize both models' images for a prompt and embed them."""
import asyncio
import json
import logging
from pathlib import Path
from typing import Optional, Sequence

from core.exceptions import ConfigError, ContentRefused
from core.types import PromptOrigin, PromptRecord, normalize_text
from services.backends.base import BackendSuite

logger = logging.getLogger(__name__)


def load_prompts(path: str | Path) -> list[str]:
    """
    Read prompts from a JSONL file of {"id", "text"} objects.

    Raises:
        ConfigError: If the file is missing or a line is not a prompt object
    """
    source = Path(path)
    if not source.is_file():
        raise ConfigError(f"Prompt file not found: {source}")
    prompts: list[str] = []
    for number, line in enumerate(source.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            text = json.loads(line)["text"]
        except (json.JSONDecodeError, KeyError, TypeError):
            raise ConfigError(f"{source}:{number} is not a {{id, text}} object")
        if not isinstance(text, str) or not text.strip():
            raise ConfigError(f"{source}:{number} has an empty prompt")
        prompts.append(normalize_text(text))
    return prompts


def write_prompts(path: str | Path, prompts: Sequence[str]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps({"id": PromptRecord.from_text(p).id, "text": normalize_text(p)}, ensure_ascii=False)
        for p in prompts
    ]
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")


async def build_record(
    text: str,
    suite: BackendSuite,
    images_per_prompt: int,
    origin: PromptOrigin = PromptOrigin.INITIAL,
    iteration: Optional[int] = None,
) -> Optional[PromptRecord]:
    """
    Images and image embeddings of one prompt for models A and B, seeds 0..n-1.

    Returns:
        The record, or None if either model refused the prompt
    """
    record = PromptRecord.from_text(text, origin=origin, iteration=iteration)
    seeds = list(range(images_per_prompt))
    try:
        images_a, images_b = await asyncio.gather(
            suite.image("A").synthesize_images(record.text, "A", images_per_prompt, seeds),
            suite.image("B").synthesize_images(record.text, "B", images_per_prompt, seeds),
        )
    except ContentRefused as e:
        logger.warning(f"Prompt {record.id} refused, dropped from scoring: {e.reason}", extra={"prompt_id": record.id})
        return None
    record.images_a, record.images_b = list(images_a), list(images_b)
    record.emb_a = await suite.embedding.embed_many(record.images_a)
    record.emb_b = await suite.embedding.embed_many(record.images_b)
    return record


async def build_records(
    texts: Sequence[str],
    suite: BackendSuite,
    images_per_prompt: int,
    origin: PromptOrigin = PromptOrigin.INITIAL,
    iteration: Optional[int] = None,
) -> tuple[list[PromptRecord], list[str]]:
    """
    Build records for many prompts; duplicates (same normalized text) are built once.

    Returns:
        (records in input order, texts that were refused)
    """
    unique: dict[str, str] = {}
    for text in texts:
        unique.setdefault(PromptRecord.from_text(text).id, text)
    built = await asyncio.gather(
        *(build_record(t, suite, images_per_prompt, origin, iteration) for t in unique.values())
    )
    records = [r for r in built if r is not None]
    refused = [t for t, r in zip(unique.values(), built) if r is None]
    return records, refused
