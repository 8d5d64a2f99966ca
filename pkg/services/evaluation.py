"""Judge predictions against ground-truth representations; agreement statistics."""
import asyncio
import json
import logging
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from core.dto.config import RunConfig
from core.dto.dataset import RepresentationSpec
from core.dto.evaluation import EvalReport, JudgeScore, RepresentationPrediction, RepresentationResult, TopK
from core.exceptions import (
    ConfigError,
    DegenerateMarginals,
    LengthMismatch,
    NoDiverging,
    ParseError,
    PreconditionError,
)
from core.templates import ATTRIBUTE_JUDGE, DESCRIPTION_JUDGE, SYSTEM_PROMPT, format_attribute_pair, format_concept_sets
from core.types import Provenance
from services.backends.base import BackendSuite, TextBackend
from services.blobs import BlobStore
from services.dataset import DatasetBundle, bundle_records
from services.discovery import discover, embed_attributes
from services.divergence import rank_attributes
from services.parsing import parse_rating
from services.search import search

logger = logging.getLogger(__name__)

RATINGS = (1, 2, 3)
K_VALUES = (1, 5)


async def _judge(backend: TextBackend, prompt: str, purpose: str, context: dict) -> JudgeScore:
    response = ""
    for attempt in range(2):
        response = await backend.generate_text(SYSTEM_PROMPT, prompt, purpose=purpose, context=context, attempt=attempt)
        try:
            return JudgeScore(rating=parse_rating(response), raw_response=response)
        except ParseError:
            logger.warning(f"Unparseable {purpose} response (attempt {attempt + 1})")
    return JudgeScore(rating=1, raw_response=response, flagged=True)


async def judge_attribute(pred: str, truth: str, backend: TextBackend) -> JudgeScore:
    """1-3 similarity of a predicted attribute to the true one."""
    if not pred.strip() or not truth.strip():
        raise PreconditionError("Both attributes must be non-empty")
    prompt = ATTRIBUTE_JUDGE.format(sets=format_attribute_pair(pred, truth))
    return await _judge(backend, prompt, "judge_attribute", {"pred": pred, "truth": truth})


async def judge_description(pred: Sequence[str], truth: Sequence[str], backend: TextBackend) -> JudgeScore:
    """1-3 similarity of a predicted concept set to the true one."""
    if not pred or not truth:
        raise PreconditionError("Both concept lists must be non-empty")
    prompt = DESCRIPTION_JUDGE.format(sets=format_concept_sets(list(pred), list(truth)))
    return await _judge(backend, prompt, "judge_description", {"pred": list(pred), "truth": list(truth)})


def prefix_max(scores: Sequence[float], k: int) -> float:
    """Best score among the first k; 0 when there are none."""
    head = scores[:k]
    return max(head) if head else 0.0


def _topk(scores: Sequence[float]) -> TopK:
    return TopK(top1=prefix_max(scores, 1), top5=prefix_max(scores, 5))


async def score_representation(
    truth: RepresentationSpec,
    prediction: RepresentationPrediction,
    backend: TextBackend,
) -> RepresentationResult:
    """Judge the first five attribute and description predictions of one representation."""
    attributes = prediction.attributes[: max(K_VALUES)]
    descriptions = [d for d in prediction.descriptions if d][: max(K_VALUES)]
    attribute_scores = list(await asyncio.gather(*(judge_attribute(a, truth.attribute, backend) for a in attributes)))
    description_scores = list(
        await asyncio.gather(*(judge_description(d, truth.concepts, backend) for d in descriptions))
    )
    return RepresentationResult(
        truth=truth,
        best_attribute=attributes[0] if attributes else None,
        best_description=descriptions[0] if descriptions else None,
        attribute=_topk([s.mapped for s in attribute_scores]),
        description=_topk([s.mapped for s in description_scores]),
        attribute_judgements=attribute_scores,
        description_judgements=description_scores,
    )


def _mean_topk(values: Sequence[TopK]) -> TopK:
    if not values:
        return TopK()
    return TopK(
        top1=float(np.mean([v.top1 for v in values])),
        top5=float(np.mean([v.top5 for v in values])),
    )


def summarize(results: Sequence[RepresentationResult]) -> EvalReport:
    """Average per-representation top-k scores."""
    return EvalReport(
        results=list(results),
        attribute=_mean_topk([r.attribute for r in results]),
        description=_mean_topk([r.description for r in results]),
    )


async def aggregate_topk(
    predictions: Sequence[RepresentationPrediction],
    truths: Sequence[RepresentationSpec],
    backend: TextBackend,
) -> EvalReport:
    """
    Top-1 and Top-5 judge scores averaged over ground-truth representations.

    A representation without predictions scores 0.
    """
    by_truth = {p.truth_attribute: p for p in predictions}
    missing = [t.attribute for t in truths if t.attribute not in by_truth]
    if missing:
        logger.warning(f"No predictions for: {', '.join(missing)}")
    results = await asyncio.gather(*(
        score_representation(t, by_truth.get(t.attribute, RepresentationPrediction(truth_attribute=t.attribute)), backend)
        for t in truths
    ))
    report = summarize(results)
    logger.info(
        f"Attribute top1={report.attribute.top1:.3f} top5={report.attribute.top5:.3f}; "
        f"description top1={report.description.top1:.3f} top5={report.description.top5:.3f}"
    )
    return report


def _disagreement_weights(n_categories: int, weights: str) -> np.ndarray:
    i, j = np.indices((n_categories, n_categories))
    distance = np.abs(i - j) / (n_categories - 1)
    if weights == "linear":
        return distance
    if weights == "quadratic":
        return distance**2
    raise PreconditionError(f"Unknown kappa weighting '{weights}'")


def _kappa(x: np.ndarray, y: np.ndarray, weights: str) -> float:
    n_categories = len(RATINGS)
    observed = np.zeros((n_categories, n_categories))
    np.add.at(observed, (x - 1, y - 1), 1.0)
    observed /= observed.sum()
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0))
    w = _disagreement_weights(n_categories, weights)
    chance = float((w * expected).sum())
    if chance == 0.0:
        raise DegenerateMarginals()
    return 1.0 - float((w * observed).sum()) / chance


def weighted_kappa(
    ratings_x: Sequence[int],
    ratings_y: Sequence[int],
    weights: Literal["linear", "quadratic"] = "linear",
) -> float:
    """
    Weighted Cohen's kappa over 1-3 ratings.

    Raises:
        LengthMismatch: If the vectors differ in length
        PreconditionError: Fewer than two ratings, or a rating outside 1-3
    """
    if len(ratings_x) != len(ratings_y):
        raise LengthMismatch(f"Rating vectors differ in length: {len(ratings_x)} != {len(ratings_y)}")
    if len(ratings_x) < 2:
        raise PreconditionError("Kappa needs at least two ratings")
    x = np.asarray(ratings_x, dtype=int)
    y = np.asarray(ratings_y, dtype=int)
    if not (np.isin(x, RATINGS).all() and np.isin(y, RATINGS).all()):
        raise PreconditionError("Ratings must be 1, 2 or 3")
    try:
        return _kappa(x, y, weights)
    except DegenerateMarginals:
        # both raters gave one and the same rating throughout
        return 1.0


def kappa_report(ratings_x: Sequence[int], ratings_y: Sequence[int]) -> dict[str, float]:
    return {w: weighted_kappa(ratings_x, ratings_y, w) for w in ("linear", "quadratic")}


async def evaluate_bundle(
    bundle: DatasetBundle,
    suite: BackendSuite,
    config: RunConfig,
    blobs: Optional[BlobStore] = None,
) -> RepresentationResult:
    """
    Discover and search on one benchmark bundle, then judge against its ground truth.

    Search runs in retrieve mode over the bundle's own prompts since only one
    model rendered the bundle.
    """
    records, distractors = await bundle_records(bundle, suite, blobs)
    pool = records + distractors
    th = config.thresholds.benchmark
    attributes, _ = await discover(pool, suite, th, config.discovery)

    descriptions: list[tuple[float, list[str]]] = []
    search_cfg = config.search.model_copy(update={"mode": "retrieve", "thresholds": th})
    for attribute in attributes[: max(K_VALUES)]:
        try:
            description, trace = await search(attribute, pool, search_cfg, suite)
        except NoDiverging:
            continue
        if description is not None and description.key_concepts:
            descriptions.append((trace.best_sigma, description.key_concepts))
    descriptions.sort(key=lambda item: -item[0])

    prediction = RepresentationPrediction(
        truth_attribute=bundle.spec.attribute,
        attributes=[a.text for a in attributes],
        descriptions=[concepts for _, concepts in descriptions],
    )
    return await score_representation(bundle.spec, prediction, suite.text)


async def planted_attribute_score(bundle: DatasetBundle, suite: BackendSuite, config: RunConfig) -> float:
    """Mean divergence of the bundle's own attribute over its pairs."""
    records, _ = await bundle_records(bundle, suite)
    (attribute,) = await embed_attributes(
        [bundle.spec.attribute], suite.embedding, config.discovery.attribute_template, Provenance.MANUAL
    )
    (ranked,) = rank_attributes([attribute], records, config.thresholds.benchmark)
    return ranked.mean_divergence


def load_predictions(path: str | Path) -> list[RepresentationPrediction]:
    """
    Read predictions: a list of {truth_attribute, attributes, descriptions}.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    source = Path(path)
    if not source.is_file():
        raise ConfigError(f"Predictions file not found: {source}")
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
        return [RepresentationPrediction.model_validate(item) for item in data]
    except (json.JSONDecodeError, ValidationError, TypeError) as e:
        raise ConfigError(f"Invalid predictions file {source}: {e}")


def write_eval_report(report: EvalReport, path: str | Path, kappa: Optional[dict[str, float]] = None) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if kappa:
        report = report.model_copy(update={"kappa": kappa})
    target.write_text(
        json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return target
