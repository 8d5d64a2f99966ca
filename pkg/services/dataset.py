"""
Benchmark bundles with a planted divergence.

One image model renders both an original prompt and an altered copy that adds
the attribute, so the attribute diverges between the two image sets by
construction. Distractors render the same prompt twice with different seeds.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from core.dto.config import DatasetConfig, Thresholds
from core.dto.dataset import BundleCounts, BundleManifest, DistractorRow, PromptPairRow, RepresentationSpec
from core.exceptions import ContentRefused, CountMismatch, ManifestError, ParseError
from core.templates import PROMPT_PAIRS, SYSTEM_PROMPT
from core.types import Attribute, ImageHandle, PromptOrigin, PromptRecord, prompt_id
from services.backends.base import BackendSuite, Message
from services.blobs import BlobStore
from services.discovery import embed_attributes
from services.divergence import classify_diverging
from services.parsing import parse_prompt_pairs
from services.sim.world import SimWorld, sim_prompts

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
PAIRS = "pairs.jsonl"
DISTRACTORS = "distractors.jsonl"
BLOBS = "blobs"

ART_STYLES = [
    "An oil painting", "A watercolor painting", "A pencil sketch", "A photograph", "A digital illustration",
    "A charcoal drawing", "A pixel art image", "A ukiyo-e print", "A 3D render",
]
ADJECTIVES = ["happy", "lonely", "ancient", "tiny", "majestic", "mysterious", "playful", "weathered", "serene"]
SUBJECTS = ["dog", "lighthouse", "grandmother", "robot", "forest", "sailboat", "city street", "teacup", "mountain"]


def templated_prompts() -> list[str]:
    """Every "<style> of a <adjective> <subject>" combination."""
    return [f"{style} of a {adjective} {subject}" for style in ART_STYLES for adjective in ADJECTIVES for subject in SUBJECTS]


def token_edit_distance(a: str, b: str) -> float:
    """Levenshtein distance over whitespace tokens, divided by the longer length."""
    x, y = a.split(), b.split()
    if not x and not y:
        return 0.0
    previous = list(range(len(y) + 1))
    for i, token in enumerate(x, start=1):
        current = [i] + [0] * len(y)
        for j, other in enumerate(y, start=1):
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (token != other))
        previous = current
    return previous[-1] / max(len(x), len(y))


@dataclass
class DatasetBundle:
    manifest: BundleManifest
    pairs: list[PromptPairRow] = field(default_factory=list)
    distractors: list[DistractorRow] = field(default_factory=list)

    @property
    def spec(self) -> RepresentationSpec:
        return self.manifest.spec


@dataclass
class BundleValidation:
    diverging_fraction: float
    distractor_rate: float
    accepted: bool


def _mentions(text: str, attribute: str) -> bool:
    return attribute.lower() in text.lower()


async def gen_prompt_pairs(
    spec: RepresentationSpec,
    n: int,
    suite: BackendSuite,
    batch: int = 5,
) -> list[tuple[str, str]]:
    """
    n (original, altered) prompt pairs, requested `batch` at a time in one conversation.

    Originals that mention the attribute are rejected and regenerated. A batch
    that fails to parse is retried once and then skipped.
    """
    if n < 1:
        raise ValueError("n must be positive")
    concepts = ", ".join(spec.concepts)
    messages: list[Message] = [{"role": "system", "content": SYSTEM_PROMPT}]
    pairs: list[tuple[str, str]] = []
    seen: set[str] = set()
    max_batches = 2 * math.ceil(n / batch) + 2

    for index in range(max_batches):
        if len(pairs) >= n:
            break
        count = min(batch, n - len(pairs))
        request = PROMPT_PAIRS.format(count=count, concepts=concepts, attribute=spec.attribute)
        if index:
            request = f"Write {count} more pairs, different from the ones above.\n\n{request}"
        turn = messages + [{"role": "user", "content": request}]
        context = {"concepts": list(spec.concepts), "attribute": spec.attribute, "count": count}

        parsed: Optional[list[tuple[str, str]]] = None
        for attempt in range(2):
            response = await suite.text.chat(turn, purpose="prompt_pairs", context=context, attempt=attempt)
            try:
                parsed = parse_prompt_pairs(response)
                break
            except ParseError:
                logger.warning(f"Prompt-pair batch {index} unparseable (attempt {attempt + 1})")
        if parsed is None:
            continue
        messages = turn + [{"role": "assistant", "content": response}]

        for original, altered in parsed:
            if _mentions(original, spec.attribute):
                logger.debug(f"Rejected original mentioning the attribute: {original}")
                continue
            if original in seen or len(pairs) >= n:
                continue
            seen.add(original)
            pairs.append((original, altered))
    if len(pairs) < n:
        logger.warning(f"Generated {len(pairs)}/{n} prompt pairs for '{spec.attribute}'")
    return pairs


def _handles(images: Sequence[ImageHandle]) -> list[dict]:
    return [h.to_dict() for h in images]


async def build_bundle(
    spec: RepresentationSpec,
    suite: BackendSuite,
    cfg: DatasetConfig,
    world: Optional[SimWorld] = None,
    live: bool = False,
) -> DatasetBundle:
    """
    Prompt pairs rendered by a single model, plus same-prompt distractors.

    The bundle is marked incomplete when fewer than `min_valid_pairs` pairs
    survive generation and synthesis.
    """
    backend = suite.image(cfg.model_tag)
    n = cfg.pairs_per_prompt
    seeds = list(range(n))
    pairs = await gen_prompt_pairs(spec, cfg.n_prompts, suite, cfg.batch)

    rows: list[PromptPairRow] = []
    for original, altered in pairs:
        try:
            images_b = await backend.synthesize_images(original, cfg.model_tag, n, seeds)
            images_a = await backend.synthesize_images(altered, cfg.model_tag, n, seeds)
        except ContentRefused as e:
            logger.warning(f"Pair dropped, synthesis refused: {e.reason}")
            continue
        distance = token_edit_distance(original, altered)
        rows.append(PromptPairRow(
            id=prompt_id(original),
            prompt=original,
            altered_prompt=altered,
            edit_distance=distance,
            flagged=distance > cfg.edit_flag,
            images_a=_handles(images_a),
            images_b=_handles(images_b),
        ))

    if world is not None:
        distractor_prompts = sim_prompts(world, cfg.distractors, seed=cfg.seed + 1)
    else:
        bank = templated_prompts()
        rng = np.random.default_rng(cfg.seed)
        picks = rng.choice(len(bank), size=min(cfg.distractors, len(bank)), replace=False)
        distractor_prompts = [bank[int(i)] for i in picks]

    distractors: list[DistractorRow] = []
    for text in distractor_prompts:
        try:
            first = await backend.synthesize_images(text, cfg.model_tag, n, seeds)
            second = await backend.synthesize_images(text, cfg.model_tag, n, [s + n for s in seeds])
        except ContentRefused:
            continue
        distractors.append(DistractorRow(id=prompt_id(text), prompt=text, images_a=_handles(second), images_b=_handles(first)))

    flagged = [r.id for r in rows if r.flagged]
    if flagged:
        logger.info(f"{len(flagged)} pairs flagged for review (edit distance > {cfg.edit_flag})")
    complete = len(rows) >= cfg.min_valid_pairs
    if not complete:
        logger.warning(f"Bundle for '{spec.attribute}' incomplete: {len(rows)}/{cfg.n_prompts} valid pairs")

    manifest = BundleManifest(
        spec=spec,
        model_id=backend.model_id,
        model_tag=cfg.model_tag,
        live=live,
        requested_pairs=cfg.n_prompts,
        counts=BundleCounts(pairs=len(rows), images_per_prompt=n, distractors=len(distractors)),
        complete=complete,
        flagged_pairs=flagged,
    )
    return DatasetBundle(manifest=manifest, pairs=rows, distractors=distractors)


def _image_ids(bundle: DatasetBundle) -> list[str]:
    ids = []
    for row in [*bundle.pairs, *bundle.distractors]:
        ids.extend(h["id"] for h in [*row.images_a, *row.images_b])
    return ids


def _write_jsonl(path: Path, rows: Iterable) -> None:
    path.write_text("".join(row.model_dump_json() + "\n" for row in rows), encoding="utf-8")


def write_bundle(bundle: DatasetBundle, directory: str | Path, blobs: Optional[BlobStore] = None) -> Path:
    """Write manifest, pair and distractor files; live rasters are copied into blobs/."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    (target / MANIFEST).write_text(bundle.manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    _write_jsonl(target / PAIRS, bundle.pairs)
    _write_jsonl(target / DISTRACTORS, bundle.distractors)
    if bundle.manifest.live and blobs is not None:
        local = BlobStore(target / BLOBS)
        for image_id in _image_ids(bundle):
            raster = blobs.get(image_id)
            if raster is not None:
                local.put(raster)
    logger.info(f"Wrote bundle '{bundle.spec.attribute}' to {target}")
    return target


def _read_jsonl(path: Path, model):
    if not path.is_file():
        raise ManifestError(f"Missing bundle file {path.name}")
    rows = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(model.model_validate_json(line))
        except ValidationError as e:
            raise ManifestError(f"{path.name}:{number} is invalid: {e.error_count()} error(s)")
    return rows


def load_bundle(directory: str | Path) -> DatasetBundle:
    """
    Read a bundle and re-check its invariants.

    Raises:
        ManifestError: Missing or invalid files, a leaked attribute, or missing live images
        CountMismatch: Contents disagree with the manifest counts
    """
    source = Path(directory)
    manifest_path = source / MANIFEST
    if not manifest_path.is_file():
        raise ManifestError(f"No {MANIFEST} in {source}")
    try:
        manifest = BundleManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ManifestError(f"Invalid manifest: {e.errors()[0]['msg']}")

    bundle = DatasetBundle(
        manifest=manifest,
        pairs=_read_jsonl(source / PAIRS, PromptPairRow),
        distractors=_read_jsonl(source / DISTRACTORS, DistractorRow),
    )
    counts = manifest.counts
    if len(bundle.pairs) != counts.pairs:
        raise CountMismatch("prompt pairs", counts.pairs, len(bundle.pairs))
    if len(bundle.distractors) != counts.distractors:
        raise CountMismatch("distractors", counts.distractors, len(bundle.distractors))
    for row in [*bundle.pairs, *bundle.distractors]:
        for images in (row.images_a, row.images_b):
            if len(images) != counts.images_per_prompt:
                raise CountMismatch(f"images for {row.id}", counts.images_per_prompt, len(images))
    leaked = [r.id for r in bundle.pairs if _mentions(r.prompt, manifest.spec.attribute)]
    if leaked:
        raise ManifestError(f"Original prompts mention the attribute: {', '.join(leaked)}")

    if manifest.live:
        local = BlobStore(source / BLOBS)
        missing = [i for i in _image_ids(bundle) if not local.exists(i)]
        if missing:
            raise ManifestError(f"Missing image files: {', '.join(missing)}", image_ids=missing)
    return bundle


async def _embedded(
    rows: Sequence[PromptPairRow | DistractorRow],
    suite: BackendSuite,
    blobs: Optional[BlobStore],
) -> list[PromptRecord]:
    def restore(data: dict) -> ImageHandle:
        raster = blobs.get(data["id"]) if blobs is not None else None
        return ImageHandle.from_dict(data, raster=raster)

    records = []
    for row in rows:
        record = PromptRecord.from_text(row.prompt, origin=PromptOrigin.PAIR)
        record.images_a = [restore(h) for h in row.images_a]
        record.images_b = [restore(h) for h in row.images_b]
        record.emb_a = await suite.embedding.embed_many(record.images_a)
        record.emb_b = await suite.embedding.embed_many(record.images_b)
        records.append(record)
    return records


def bundle_blobs(bundle: DatasetBundle, directory: str | Path) -> Optional[BlobStore]:
    """The blob store holding a live bundle's rasters; None for sim bundles."""
    return BlobStore(Path(directory) / BLOBS) if bundle.manifest.live else None


async def bundle_records(
    bundle: DatasetBundle,
    suite: BackendSuite,
    blobs: Optional[BlobStore] = None,
) -> tuple[list[PromptRecord], list[PromptRecord]]:
    """Embedded records of the pairs (altered images as model A) and of the distractors."""
    pairs = await _embedded(bundle.pairs, suite, blobs)
    distractors = await _embedded(bundle.distractors, suite, blobs)
    for record in distractors:
        record.origin = PromptOrigin.DISTRACTOR
    return pairs, distractors


async def validate_bundle(
    bundle: DatasetBundle,
    suite: BackendSuite,
    th: Thresholds,
    acceptance: float = 0.6,
    blobs: Optional[BlobStore] = None,
    template: str = "{attribute}",
) -> BundleValidation:
    """Share of pairs diverging on the bundle's attribute, and the distractor false-positive rate."""
    pairs, distractors = await bundle_records(bundle, suite, blobs)
    (attribute,) = await embed_attributes([bundle.spec.attribute], suite.embedding, template)
    return BundleValidation(
        diverging_fraction=_diverging_fraction(attribute, pairs, th),
        distractor_rate=_diverging_fraction(attribute, distractors, th),
        accepted=bool(pairs) and _diverging_fraction(attribute, pairs, th) >= acceptance,
    )


def _diverging_fraction(attribute: Attribute, records: Sequence[PromptRecord], th: Thresholds) -> float:
    if not records:
        return 0.0
    diverging, _ = classify_diverging(attribute, records, th)
    return len(diverging) / len(records)


def load_representations(path: str | Path) -> list[RepresentationSpec]:
    """
    Read a list of representation specs.

    Raises:
        ManifestError: If the file is missing or invalid
    """
    source = Path(path)
    if not source.is_file():
        raise ManifestError(f"Representation file not found: {source}")
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
        return [RepresentationSpec.model_validate(item) for item in data]
    except (json.JSONDecodeError, ValidationError, TypeError) as e:
        raise ManifestError(f"Invalid representation file {source}: {e}")
