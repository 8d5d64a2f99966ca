"""Attribute discovery: propose from comparison grids, deduplicate, rank."""
import asyncio
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from core.dto.config import DiscoveryConfig, Thresholds
from core.exceptions import BackendError, ParseError, PreconditionError
from core.templates import ATTRIBUTE_DEDUP, ATTRIBUTE_DISCOVERY, SYSTEM_PROMPT
from core.types import Attribute, PromptRecord, Provenance
from services.backends.base import BackendSuite, EmbeddingBackend, TextBackend
from services.divergence import rank_attributes
from services.grid import GridSpec, build_grid
from services.parsing import parse_attribute_response, parse_bullets, word_count

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawAttribute:
    text: str
    prompt_id: str
    flagged_long: bool = False


@dataclass
class AttributePool:
    """Proposed attributes before and after deduplication."""

    raw: list[RawAttribute] = field(default_factory=list)
    deduped: list[Attribute] = field(default_factory=list)

    @property
    def texts(self) -> list[str]:
        return [r.text for r in self.raw]


def canonical_attribute(text: str) -> str:
    return " ".join(text.lower().split())


def exact_dedup(texts: Iterable[str]) -> list[str]:
    """Drop repeats of the same canonical text, keeping the first spelling."""
    seen: set[str] = set()
    kept = []
    for text in texts:
        canonical = canonical_attribute(text)
        if canonical and canonical not in seen:
            seen.add(canonical)
            kept.append(text)
    return kept


def sample_batch(records: Sequence[PromptRecord], size: int, seed: int) -> list[PromptRecord]:
    """Seeded sample without replacement, in input order."""
    if len(records) <= size:
        return list(records)
    rng = np.random.default_rng(seed)
    picks = sorted(int(i) for i in rng.choice(len(records), size=size, replace=False))
    return [records[i] for i in picks]


def swap_models(records: Iterable[PromptRecord]) -> list[PromptRecord]:
    """Records with the two models exchanged, for discovery in the other direction."""
    return [
        replace(r, images_a=r.images_b, images_b=r.images_a, emb_a=r.emb_b, emb_b=r.emb_a)
        for r in records
    ]


async def _propose_one(record: PromptRecord, suite: BackendSuite, cfg: DiscoveryConfig) -> list[RawAttribute]:
    grid = build_grid(record, GridSpec(cell_px=cfg.cell_px), with_raster=suite.vision.requires_raster)
    instruction = ATTRIBUTE_DISCOVERY.format(prompt=record.text, max_words=cfg.max_attribute_words)
    response = await suite.vision.describe_image_grid(grid, instruction, purpose="propose")
    try:
        model_a, _ = parse_attribute_response(response)
    except ParseError as e:
        logger.warning(f"Skipping prompt {record.id}: {e.message}", extra={"prompt_id": record.id})
        logger.debug(f"Unparsed response for {record.id}: {e.raw}")
        return []
    return [
        RawAttribute(text=item, prompt_id=record.id, flagged_long=word_count(item) > cfg.max_attribute_words)
        for item in model_a
    ]


async def propose_attributes(
    records: Sequence[PromptRecord],
    suite: BackendSuite,
    cfg: DiscoveryConfig,
) -> list[RawAttribute]:
    """
    Ask the vision model which attributes model A's images show more than model B's.

    Items longer than `max_attribute_words` are kept and flagged. Prompts
    whose response cannot be parsed are skipped.
    """
    if not records:
        raise PreconditionError("Attribute proposal needs at least one prompt")
    batches = await asyncio.gather(*(_propose_one(r, suite, cfg) for r in records))
    raw = [item for batch in batches for item in batch]
    logger.info(f"Proposed {len(raw)} raw attributes from {len(records)} prompts")
    return raw


async def dedup_attributes(texts: Sequence[str], text_backend: TextBackend) -> list[str]:
    """
    Remove semantic duplicates with the language model.

    The result is always a subset of the exact-deduplicated input; anything the
    model invents is ignored, and a backend or parse failure falls back to the
    exact pass.
    """
    if not texts:
        raise PreconditionError("Cannot deduplicate an empty attribute pool")
    exact = exact_dedup(texts)
    if len(exact) == 1:
        return exact

    by_canonical = {canonical_attribute(t): t for t in exact}
    prompt = ATTRIBUTE_DEDUP.format(attributes="\n".join(f"* {t}" for t in exact))
    try:
        response = await text_backend.generate_text(
            SYSTEM_PROMPT, prompt, purpose="dedup", context={"attributes": exact}
        )
    except BackendError as e:
        logger.warning(f"Dedup backend failed ({e.message}); keeping exact dedup")
        return exact

    kept = exact_dedup(
        by_canonical[c] for c in (canonical_attribute(item) for item in parse_bullets(response)) if c in by_canonical
    )
    if not kept:
        logger.warning("Dedup response kept no known attribute; keeping exact dedup")
        return exact
    return kept


async def embed_attributes(
    texts: Sequence[str],
    embedding: EmbeddingBackend,
    template: str = "{attribute}",
    provenance: Provenance = Provenance.VLM,
    flagged: Optional[set[str]] = None,
) -> list[Attribute]:
    """Attribute objects with text embeddings of the templated attribute text."""
    flagged = flagged or set()
    vectors = await embedding.embed_many([template.format(attribute=t) for t in texts])
    return [
        Attribute(text=t, embedding=v, provenance=provenance, flagged_long=t in flagged)
        for t, v in zip(texts, vectors)
    ]


async def discover(
    records: Sequence[PromptRecord],
    suite: BackendSuite,
    th: Thresholds,
    cfg: DiscoveryConfig,
) -> tuple[list[Attribute], AttributePool]:
    """
    Propose on a seeded batch, deduplicate, then rank over every record.

    Returns:
        (attributes with mean divergence above 0, descending; the attribute pool)
    """
    if not records:
        raise PreconditionError("Discovery needs at least one prompt")
    batch = sample_batch(records, cfg.batch_size, cfg.seed)
    pool = AttributePool(raw=await propose_attributes(batch, suite, cfg))
    if not pool.raw:
        logger.warning("No attributes proposed")
        return [], pool

    texts = await dedup_attributes(pool.texts, suite.text)
    flagged = {r.text for r in pool.raw if r.flagged_long}
    attributes = await embed_attributes(texts, suite.embedding, cfg.attribute_template, Provenance.VLM, flagged)
    ranked = rank_attributes(attributes, records, th, cfg.aggregation)
    pool.deduped = ranked
    kept = [a for a in ranked if a.mean_divergence > 0]
    logger.info(f"Ranked {len(ranked)} attributes, {len(kept)} with non-zero divergence")
    return kept, pool


def attributes_document(attributes: Iterable[Attribute]) -> list[dict]:
    """Rows of attributes.json."""
    return [a.to_dict() for a in attributes]
