"""
Divergence scoring.

An attribute diverges on a prompt when model A's images show it (similarity
above t) and model B's images show it clearly less (gap above delta). Scores
are 0/1 per prompt; their mean over a prompt set ranks attributes.
"""
import logging
from dataclasses import replace
from typing import Iterable, Literal, Sequence

import numpy as np

from core.dto.config import Thresholds
from core.exceptions import DimMismatch, EmptySet, PreconditionError, RaggedRecord
from core.types import Attribute, Embedding, PromptRecord

logger = logging.getLogger(__name__)

Aggregation = Literal["mean", "max"]
VectorLike = Embedding | np.ndarray | Sequence[float]


def _array(value: VectorLike) -> np.ndarray:
    if isinstance(value, Embedding):
        return value.vector
    return np.asarray(value, dtype=np.float64).ravel()


def _attribute_vector(attribute: Attribute | Embedding) -> np.ndarray:
    if isinstance(attribute, Embedding):
        return attribute.vector
    if attribute.embedding is None:
        raise PreconditionError(f"Attribute '{attribute.text}' is not embedded")
    return attribute.embedding.vector


def cosine(u: VectorLike, v: VectorLike) -> float:
    """
    Cosine similarity; a plain dot product when both are normalized embeddings.

    Raises:
        DimMismatch: If the vectors differ in length
    """
    a, b = _array(u), _array(v)
    if a.shape != b.shape:
        raise DimMismatch(a.shape[0], b.shape[0])
    if isinstance(u, Embedding) and isinstance(v, Embedding) and u.normalized and v.normalized:
        value = float(np.dot(a, b))
    else:
        norms = float(np.linalg.norm(a) * np.linalg.norm(b))
        if norms == 0.0:
            raise PreconditionError("Cosine of a zero vector is undefined")
        value = float(np.dot(a, b) / norms)
    return min(1.0, max(-1.0, value))


def _aggregate(values: np.ndarray, aggregation: Aggregation, axis: int = 0) -> np.ndarray:
    if aggregation == "max":
        return values.max(axis=axis)
    return values.mean(axis=axis)


def set_similarity(
    attribute: Attribute | Embedding,
    images: Sequence[Embedding],
    aggregation: Aggregation = "mean",
) -> float:
    """
    Similarity of an attribute to an image set: mean (or max) of per-image cosines.

    Raises:
        EmptySet: If images is empty
    """
    if not images:
        raise EmptySet()
    vector = _attribute_vector(attribute)
    cosines = np.array([cosine(vector, image.vector) for image in images])
    return float(_aggregate(cosines, aggregation))


def z_from_similarity(s_a: float, s_b: float, th: Thresholds) -> int:
    """1 iff s_a > t and s_a - s_b > delta."""
    return int(s_a > th.t and (s_a - s_b) > th.delta)


def z_batch(
    s_a: np.ndarray,
    s_b: np.ndarray,
    t: float | np.ndarray,
    delta: float | np.ndarray,
) -> np.ndarray:
    """Vectorized z_from_similarity; thresholds broadcast against the similarities."""
    s_a = np.asarray(s_a, dtype=np.float64)
    s_b = np.asarray(s_b, dtype=np.float64)
    return ((s_a > t) & ((s_a - s_b) > delta)).astype(np.int8)


def _require_embedded(record: PromptRecord) -> None:
    if not record.is_embedded():
        raise PreconditionError(f"Record {record.id} has no image embeddings")
    if len(record.emb_a) != len(record.emb_b):
        raise RaggedRecord(record.id, len(record.emb_a), len(record.emb_b))


def divergence_score(
    attribute: Attribute | Embedding,
    record: PromptRecord,
    th: Thresholds,
    aggregation: Aggregation = "mean",
) -> int:
    """0/1 divergence of one prompt's image sets."""
    _require_embedded(record)
    s_a = set_similarity(attribute, record.emb_a, aggregation)
    s_b = set_similarity(attribute, record.emb_b, aggregation)
    return z_from_similarity(s_a, s_b, th)


def divergence_score_multi(
    attribute: Attribute | Embedding,
    image_sets: Sequence[Sequence[Embedding]],
    th: Thresholds,
    aggregation: Aggregation = "mean",
) -> int:
    """
    Divergence of the first model against all others: presence in set 0 and a
    gap above delta to the most similar competing set.
    """
    if len(image_sets) < 2:
        raise PreconditionError(f"Need at least two image sets, got {len(image_sets)}")
    similarities = [set_similarity(attribute, images, aggregation) for images in image_sets]
    return z_from_similarity(similarities[0], max(similarities[1:]), th)


def pair_votes(attribute: Attribute | Embedding, record: PromptRecord, th: Thresholds) -> list[int]:
    """Per image pair (same seed index) divergence over singleton sets."""
    _require_embedded(record)
    if len(record.images_a) != len(record.images_b):
        raise RaggedRecord(record.id, len(record.images_a), len(record.images_b))
    return [
        divergence_score(attribute, PromptRecord(id=record.id, text=record.text, emb_a=[ea], emb_b=[eb]), th)
        for ea, eb in zip(record.emb_a, record.emb_b)
    ]


def is_majority(votes: Sequence[int]) -> bool:
    """Strictly more than half; ties are not diverging."""
    return 2 * sum(votes) > len(votes)


def classify_diverging(
    attribute: Attribute | Embedding,
    records: Iterable[PromptRecord],
    th: Thresholds,
) -> tuple[list[PromptRecord], list[PromptRecord]]:
    """
    Split records into diverging and non-diverging prompts by majority of image pairs.

    Raises:
        RaggedRecord: If a record holds unequal image counts for the two models
    """
    diverging: list[PromptRecord] = []
    non_diverging: list[PromptRecord] = []
    for record in records:
        if is_majority(pair_votes(attribute, record, th)):
            diverging.append(record)
        else:
            non_diverging.append(record)
    return diverging, non_diverging


def _attribute_matrix(attributes: Sequence[Attribute]) -> np.ndarray:
    matrix = np.stack([_attribute_vector(a) for a in attributes])
    return matrix


def similarity_matrix(
    attributes: Sequence[Attribute],
    records: Sequence[PromptRecord],
    aggregation: Aggregation = "mean",
) -> tuple[np.ndarray, np.ndarray]:
    """
    Set similarities of every attribute on every record.

    Returns:
        (s_a, s_b), each of shape (records, attributes)
    """
    matrix = _attribute_matrix(attributes)
    s_a = np.empty((len(records), len(attributes)))
    s_b = np.empty((len(records), len(attributes)))
    for i, record in enumerate(records):
        _require_embedded(record)
        images_a = np.stack([e.vector for e in record.emb_a])
        images_b = np.stack([e.vector for e in record.emb_b])
        if images_a.shape[1] != matrix.shape[1]:
            raise DimMismatch(matrix.shape[1], images_a.shape[1])
        s_a[i] = _aggregate(np.einsum("nd,md->nm", images_a, matrix), aggregation)
        s_b[i] = _aggregate(np.einsum("nd,md->nm", images_b, matrix), aggregation)
    return s_a, s_b


def _sorted(attributes: Iterable[Attribute]) -> list[Attribute]:
    return sorted(attributes, key=lambda a: (-a.mean_divergence, a.text))


def rank_attributes(
    attributes: Sequence[Attribute],
    records: Sequence[PromptRecord],
    th: Thresholds,
    aggregation: Aggregation = "mean",
) -> list[Attribute]:
    """
    Score each attribute by its mean divergence over records and sort
    descending, ties broken by attribute text.

    Raises:
        PreconditionError: If records is empty
    """
    if not records:
        raise PreconditionError("Cannot rank attributes over an empty prompt set")
    if not attributes:
        return []
    s_a, s_b = similarity_matrix(attributes, records, aggregation)
    scores = z_batch(s_a, s_b, th.t, th.delta).mean(axis=0)
    ranked = [
        replace(attribute, mean_divergence=float(score), n_prompts=len(records))
        for attribute, score in zip(attributes, scores)
    ]
    return _sorted(ranked)


def rank_attributes_multi(
    attributes: Sequence[Attribute],
    records: Sequence[Sequence[Sequence[Embedding]]],
    th: Thresholds,
    aggregation: Aggregation = "mean",
) -> list[Attribute]:
    """Rank by one-vs-many divergence; each record lists one image set per model, first model first."""
    if not records:
        raise PreconditionError("Cannot rank attributes over an empty prompt set")
    ranked = []
    for attribute in attributes:
        total = sum(divergence_score_multi(attribute, sets, th, aggregation) for sets in records)
        ranked.append(replace(attribute, mean_divergence=total / len(records), n_prompts=len(records)))
    return _sorted(ranked)


def threshold_sweep(
    attributes: Sequence[Attribute],
    records: Sequence[PromptRecord],
    ts: Sequence[float],
    deltas: Sequence[float],
    aggregation: Aggregation = "mean",
) -> list[dict[str, float | str]]:
    """Mean divergence of every attribute over a grid of (t, delta)."""
    if not attributes or not records:
        return []
    s_a, s_b = similarity_matrix(attributes, records, aggregation)
    rows: list[dict[str, float | str]] = []
    for t in ts:
        for delta in deltas:
            if delta <= 0:
                raise PreconditionError(f"delta must be positive, got {delta}")
            scores = z_batch(s_a, s_b, t, delta).mean(axis=0)
            for attribute, score in zip(attributes, scores):
                rows.append({"attribute": attribute.text, "t": float(t), "delta": float(delta),
                             "mean_divergence": float(score)})
    return rows
