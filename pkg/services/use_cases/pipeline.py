"""
Pipeline use cases: materialize prompts, discover attributes, search descriptions.
"""
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from core.dto.report import AttributeFailure, DiscoveredRepresentation, RunReport
from core.dto.search import SearchTrace
from core.exceptions import ConfigError, RepdiffError
from core.types import Attribute, PromptRecord, Provenance, content_hash
from services.discovery import AttributePool, attributes_document, discover, embed_attributes, swap_models
from services.divergence import rank_attributes, threshold_sweep
from services.journal import ATTRIBUTE_DONE, ATTRIBUTE_FAILED, RUN_FINISHED, RUN_STARTED
from services.records import build_records, load_prompts
from services.search import search
from services.sim.world import sim_prompts
from services.use_cases.base import BaseUseCase

logger = logging.getLogger(__name__)

ATTRIBUTES_FILE = "attributes.json"
REPORT_FILE = "report.json"
TRACES_DIR = "traces"


def slugify(text: str) -> str:
    """File-safe name for an attribute; the hash suffix keeps distinct texts apart."""
    stem = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")[:40] or "attribute"
    return f"{stem}-{content_hash(text)[:8]}"


def write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


class LoadRecordsUseCase(BaseUseCase[list[PromptRecord]]):
    """Initial prompts with both models' images and embeddings."""

    async def execute(self, prompts_path: Optional[str] = None) -> list[PromptRecord]:
        """
        Read prompts from a file, or draw them from the world in sim mode.

        Raises:
            ConfigError: If no prompt source is available
        """
        path = prompts_path or self.config.paths.prompts
        if path:
            texts = load_prompts(path)
        elif self.context.world is not None:
            texts = sim_prompts(self.context.world, self.config.sim.n_prompts, self.config.sim.prompts_seed)
        else:
            raise ConfigError("Live mode needs paths.prompts")

        records, refused = await build_records(texts, self.suite, self.config.discovery.images_per_prompt)
        if refused:
            logger.warning(f"{len(refused)} prompts refused by an image model")
        logger.info(f"Built {len(records)} prompt records")
        return records


class DiscoverUseCase(BaseUseCase[tuple[list[Attribute], AttributePool]]):
    """Rank attributes that model A shows more often than model B."""

    async def execute(
        self,
        records: Sequence[PromptRecord],
        swap: bool = False,
        sweep_out: Optional[str] = None,
    ) -> tuple[list[Attribute], AttributePool]:
        if swap:
            records = swap_models(records)
        attributes, pool = await discover(records, self.suite, self.config.thresholds.discovery, self.config.discovery)
        write_json(self.context.out_dir / ATTRIBUTES_FILE, attributes_document(attributes))

        if sweep_out and pool.deduped:
            rows = threshold_sweep(
                pool.deduped,
                records,
                ts=[0.0, 0.1, 0.2, 0.3],
                deltas=[0.01, 0.05, 0.1],
            )
            write_json(Path(sweep_out), rows)
            logger.info(f"Threshold sweep written to {sweep_out}")
        return attributes, pool


@dataclass
class SearchOutcome:
    representation: DiscoveredRepresentation
    trace: SearchTrace


class SearchAttributeUseCase(BaseUseCase[SearchOutcome]):
    """Search the description of one attribute and write its trace."""

    async def execute(self, attribute: Attribute | str, records: Sequence[PromptRecord]) -> SearchOutcome:
        if isinstance(attribute, str):
            (embedded,) = await embed_attributes(
                [attribute], self.suite.embedding, self.config.discovery.attribute_template, Provenance.MANUAL
            )
            (attribute,) = rank_attributes([embedded], records, self.config.search.thresholds)

        description, trace = await search(attribute, records, self.config.search, self.suite)
        trace_path = Path(TRACES_DIR) / f"{slugify(attribute.text)}.json"
        write_json(self.context.out_dir / trace_path, trace.model_dump(mode="json"))

        best = trace.best_description
        representation = DiscoveredRepresentation(
            attribute=attribute.text,
            mean_divergence=attribute.mean_divergence,
            provenance=attribute.provenance.value,
            description=best if best is not None else {"text": ""},
            best_sigma=trace.best_sigma,
            best_iteration=trace.best_index,
            terminated_early=trace.terminated_early,
            trace_path=trace_path.as_posix(),
        )
        logger.info(
            f"Best sigma {trace.best_sigma:.2f} at iteration {trace.best_index}",
            extra={"attribute": attribute.text},
        )
        return SearchOutcome(representation, trace)


class RunPipelineUseCase(BaseUseCase[RunReport]):
    """
    Discover, then search every attribute at or above the score floor.

    Finished attributes are journaled; a rerun with the same journal skips them
    and reuses their recorded result. One attribute's failure is recorded in
    the report and does not stop the others.
    """

    async def execute(self) -> RunReport:
        journal = self.context.journal
        await journal.append(RUN_STARTED, models=self.config.model_ids())
        records = await LoadRecordsUseCase(self.context).execute()
        attributes, pool = await DiscoverUseCase(self.context).execute(records)

        floor = self.config.discovery.score_floor
        selected = [a for a in attributes if a.mean_divergence >= floor]
        logger.info(f"{len(selected)}/{len(attributes)} attributes at or above floor {floor}")

        completed = journal.completed_attributes()
        searcher = SearchAttributeUseCase(self.context)
        discovered: list[DiscoveredRepresentation] = []
        failures: list[AttributeFailure] = []

        for attribute in selected:
            if attribute.text in completed:
                logger.info("Reusing finished search", extra={"attribute": attribute.text})
                discovered.append(DiscoveredRepresentation.model_validate(completed[attribute.text]["representation"]))
                continue
            try:
                outcome = await searcher.execute(attribute, records)
            except RepdiffError as e:
                logger.warning(f"Search failed: {e.message}", extra={"attribute": attribute.text})
                failures.append(AttributeFailure(attribute=attribute.text, error=type(e).__name__, message=e.message))
                await journal.append(ATTRIBUTE_FAILED, attribute=attribute.text, error=type(e).__name__)
                continue
            discovered.append(outcome.representation)
            await journal.append(
                ATTRIBUTE_DONE,
                attribute=attribute.text,
                representation=outcome.representation.model_dump(mode="json"),
            )

        report = RunReport(
            models=self.config.model_ids(),
            n_prompts=len(records),
            attributes_ranked=len(pool.deduped),
            discovered=discovered,
            failures=failures,
            config=self.config.model_dump(mode="json"),
            cache=await self.context.cache.entry_counts(),
        )
        target = self.context.out_dir / REPORT_FILE
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(report.to_json(), encoding="utf-8")
        await journal.append(RUN_FINISHED, discovered=len(discovered), failures=len(failures))
        logger.info(f"Report written to {target}")
        return report
