"""
Benchmark use cases: bundle generation and validation, baselines, judging.
"""
import logging
from pathlib import Path
from typing import Literal, Optional, Sequence

from core.dto.dataset import RepresentationSpec
from core.dto.evaluation import EvalReport, RepresentationPrediction
from core.exceptions import PreconditionError
from core.types import PromptRecord
from services import baselines
from services.dataset import (
    BundleValidation,
    DatasetBundle,
    build_bundle,
    bundle_blobs,
    load_bundle,
    validate_bundle,
    write_bundle,
)
from services.evaluation import aggregate_topk, evaluate_bundle, summarize
from services.use_cases.base import BaseUseCase
from services.use_cases.pipeline import slugify, write_json

logger = logging.getLogger(__name__)

BaselineMethod = Literal["tfidf", "llm-only", "visdiff"]


class GenerateBundlesUseCase(BaseUseCase[list[Path]]):
    """One bundle directory per representation under `out_dir`."""

    async def execute(self, specs: Sequence[RepresentationSpec], out_dir: str | Path) -> list[Path]:
        if not specs:
            if self.context.world is None:
                raise PreconditionError("No representations given")
            specs = [self.context.world.spec()]
        written = []
        for spec in specs:
            bundle = await build_bundle(
                spec,
                self.suite,
                self.config.dataset,
                world=self.context.world,
                live=self.config.mode == "live",
            )
            target = Path(out_dir) / slugify(spec.attribute)
            written.append(write_bundle(bundle, target, self.context.blobs))
        return written


class ValidateBundleUseCase(BaseUseCase[BundleValidation]):
    async def execute(self, directory: str | Path) -> BundleValidation:
        bundle = load_bundle(directory)
        blobs = bundle_blobs(bundle, directory)
        result = await validate_bundle(
            bundle,
            self.suite,
            self.config.thresholds.benchmark,
            acceptance=self.config.dataset.acceptance,
            blobs=blobs,
            template=self.config.discovery.attribute_template,
        )
        logger.info(
            f"Bundle '{bundle.spec.attribute}': {result.diverging_fraction:.2f} diverging, "
            f"distractor rate {result.distractor_rate:.3f}, accepted={result.accepted}"
        )
        return result


class BaselineUseCase(BaseUseCase[list[dict]]):
    """Ranked attributes (and, for llm-only, descriptions) from a comparison method."""

    async def execute(self, method: BaselineMethod, records: Sequence[PromptRecord]) -> list[dict]:
        th = self.config.thresholds.discovery
        cfg = self.config.discovery
        if method == "tfidf":
            attributes = await baselines.tfidf_attr_discovery(records, self.suite, th, cfg)
            rows = []
            for attribute in attributes:
                row = attribute.to_dict()
                if attribute.mean_divergence > 0:
                    row["description"] = baselines.tfidf_desc_discovery(attribute, records, th).to_dict()
                rows.append(row)
        elif method == "llm-only":
            pairs = await baselines.llm_only(records, self.suite, th, cfg)
            rows = [{**a.to_dict(), "description": d.to_dict()} for a, d in pairs]
        elif method == "visdiff":
            rows = [a.to_dict() for a in await baselines.visdiff_attrs(records, self.suite, th, cfg)]
        else:
            raise PreconditionError(f"Unknown baseline method '{method}'")
        write_json(self.context.out_dir / f"baseline_{method}.json", rows)
        return rows


class EvaluateUseCase(BaseUseCase[EvalReport]):
    """Judge predictions against ground truth, or run and judge whole bundles."""

    async def execute(
        self,
        truths: Sequence[RepresentationSpec],
        predictions: Optional[Sequence[RepresentationPrediction]] = None,
        bundle_dirs: Sequence[str | Path] = (),
    ) -> EvalReport:
        if predictions is not None:
            return await aggregate_topk(predictions, truths, self.suite.text)
        if not bundle_dirs:
            raise PreconditionError("Evaluation needs predictions or bundles")
        results = []
        for directory in bundle_dirs:
            bundle: DatasetBundle = load_bundle(directory)
            results.append(await evaluate_bundle(bundle, self.suite, self.config, bundle_blobs(bundle, directory)))
        return summarize(results)
