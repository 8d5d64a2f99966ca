"""Unit tests for divergence scoring."""
import numpy as np
import pytest

from core.dto.config import Thresholds
from core.exceptions import DimMismatch, EmptySet, PreconditionError, RaggedRecord
from core.types import Attribute, Embedding, PromptRecord
from services.divergence import (
    classify_diverging,
    cosine,
    divergence_score,
    divergence_score_multi,
    is_majority,
    pair_votes,
    rank_attributes,
    set_similarity,
    threshold_sweep,
    z_batch,
    z_from_similarity,
)


def unit(*values: float) -> Embedding:
    return Embedding.from_vector(values)


def record(emb_a: list[Embedding], emb_b: list[Embedding]) -> PromptRecord:
    return PromptRecord(id="r", text="a prompt", emb_a=emb_a, emb_b=emb_b)


def test_z_batch_matches_scalar_rule():
    """Test the vectorized score agrees with the scalar rule on random inputs."""
    rng = np.random.default_rng(0)
    s_a = rng.uniform(-1, 1, 1000)
    s_b = rng.uniform(-1, 1, 1000)
    t = rng.uniform(-0.5, 0.5, 1000)
    delta = rng.uniform(0.001, 0.5, 1000)

    batch = z_batch(s_a, s_b, t, delta)
    for i in range(1000):
        expected = z_from_similarity(s_a[i], s_b[i], Thresholds(t=t[i], delta=delta[i]))
        assert batch[i] == expected


def test_z_requires_both_conditions():
    """Test presence and gap are both required, with strict inequalities."""
    th = Thresholds(t=0.2, delta=0.05)

    assert z_from_similarity(0.5, 0.3, th) == 1
    assert z_from_similarity(0.2, 0.0, th) == 0
    assert z_from_similarity(0.5, 0.45, th) == 0
    assert z_from_similarity(0.1, -0.5, th) == 0


def test_thresholds_reject_non_positive_delta():
    """Test delta must be strictly positive."""
    with pytest.raises(ValueError):
        Thresholds(delta=0.0)


def test_cosine_of_normalized_embeddings():
    """Test cosine is the dot product of unit vectors and stays in [-1, 1]."""
    assert cosine(unit(1, 0), unit(1, 0)) == pytest.approx(1.0)
    assert cosine(unit(1, 0), unit(0, 1)) == pytest.approx(0.0)
    assert cosine(unit(1, 1), unit(-1, -1)) == pytest.approx(-1.0)
    assert cosine([3.0, 0.0], [1.0, 1.0]) == pytest.approx(1 / np.sqrt(2))


def test_cosine_dimension_mismatch():
    """Test vectors of different length are rejected."""
    with pytest.raises(DimMismatch):
        cosine(unit(1, 0), unit(1, 0, 0))


def test_cosine_zero_vector():
    """Test a zero vector has no cosine."""
    with pytest.raises(PreconditionError):
        cosine([0.0, 0.0], [1.0, 0.0])


def test_set_similarity_mean_and_max():
    """Test mean and max aggregation over an image set."""
    images = [unit(1, 0), unit(0, 1)]
    attribute = unit(1, 0)

    assert set_similarity(attribute, images) == pytest.approx(0.5)
    assert set_similarity(attribute, images, "max") == pytest.approx(1.0)


def test_set_similarity_empty_set():
    """Test an empty image set raises."""
    with pytest.raises(EmptySet):
        set_similarity(unit(1, 0), [])


def test_unembedded_attribute():
    """Test scoring needs an attribute embedding."""
    with pytest.raises(PreconditionError):
        set_similarity(Attribute(text="fire"), [unit(1, 0)])


def test_divergence_score_single_record():
    """Test a record where model A shows the attribute and B does not."""
    attribute = unit(1, 0)
    diverging = record([unit(1, 0)] * 2, [unit(0, 1)] * 2)
    same = record([unit(1, 0)] * 2, [unit(1, 0)] * 2)

    assert divergence_score(attribute, diverging, Thresholds()) == 1
    assert divergence_score(attribute, same, Thresholds()) == 0


def test_divergence_score_multi_uses_closest_competitor():
    """Test the first model must beat every other model by delta."""
    attribute = unit(1, 0)
    sets = [[unit(1, 0)], [unit(0, 1)], [unit(1, 0.01)]]

    assert divergence_score_multi(attribute, sets, Thresholds()) == 0
    assert divergence_score_multi(attribute, sets[:2], Thresholds()) == 1
    with pytest.raises(PreconditionError):
        divergence_score_multi(attribute, sets[:1], Thresholds())


def test_is_majority_ties_are_not_diverging():
    """Test majority is strict."""
    assert is_majority([1, 1, 0])
    assert not is_majority([1, 0])
    assert not is_majority([0, 0, 0])
    assert not is_majority([])


def test_pair_votes_ragged_record():
    """Test unequal image counts are reported."""
    ragged = record([unit(1, 0)] * 3, [unit(0, 1)] * 2)

    with pytest.raises(RaggedRecord):
        pair_votes(unit(1, 0), ragged, Thresholds())
    with pytest.raises(RaggedRecord):
        classify_diverging(unit(1, 0), [ragged], Thresholds())


def test_classify_diverging_by_majority():
    """Test records split by per-pair majority."""
    attribute = unit(1, 0)
    two_of_three = PromptRecord(
        id="a", text="a", emb_a=[unit(1, 0), unit(1, 0), unit(0, 1)], emb_b=[unit(0, 1)] * 3
    )
    one_of_three = PromptRecord(
        id="b", text="b", emb_a=[unit(1, 0), unit(0, 1), unit(0, 1)], emb_b=[unit(0, 1)] * 3
    )

    diverging, non_diverging = classify_diverging(attribute, [two_of_three, one_of_three], Thresholds())

    assert [r.id for r in diverging] == ["a"]
    assert [r.id for r in non_diverging] == ["b"]


def test_rank_attributes_sorted_with_text_tiebreak():
    """Test ranking is descending by score, then by text."""
    records = [record([unit(1, 0)], [unit(0, 1)])]
    attributes = [
        Attribute(text="zeta", embedding=unit(1, 0)),
        Attribute(text="beta", embedding=unit(0, 1)),
        Attribute(text="alpha", embedding=unit(1, 0)),
    ]

    ranked = rank_attributes(attributes, records, Thresholds())

    assert [a.text for a in ranked] == ["alpha", "zeta", "beta"]
    assert [a.mean_divergence for a in ranked] == [1.0, 1.0, 0.0]
    assert all(a.n_prompts == 1 for a in ranked)


@pytest.mark.parametrize("scale", [0.25, 2.0, 1024.0])
def test_rank_attributes_ignores_embedding_scale(scale):
    """Test scaling raw image vectors before normalization leaves scores and order unchanged."""
    rng = np.random.default_rng(11)
    attributes = [Attribute(text=f"attr{i}", embedding=unit(*rng.normal(size=4))) for i in range(6)]
    raw = [(rng.normal(size=(3, 4)), rng.normal(size=(3, 4))) for _ in range(40)]

    def build(factor: float) -> list[PromptRecord]:
        return [
            PromptRecord(
                id=f"p{i}",
                text=f"prompt {i}",
                emb_a=[Embedding.from_vector(v * factor) for v in a],
                emb_b=[Embedding.from_vector(v * factor) for v in b],
            )
            for i, (a, b) in enumerate(raw)
        ]

    base = rank_attributes(attributes, build(1.0), Thresholds())
    scaled = rank_attributes(attributes, build(scale), Thresholds())

    assert [a.text for a in scaled] == [a.text for a in base]
    assert [a.mean_divergence for a in scaled] == [a.mean_divergence for a in base]
    assert len({a.mean_divergence for a in base}) > 1


def test_rank_attributes_empty_records():
    """Test ranking over no prompts raises."""
    with pytest.raises(PreconditionError):
        rank_attributes([Attribute(text="x", embedding=unit(1, 0))], [], Thresholds())


def test_threshold_sweep_grid():
    """Test one row per attribute and threshold pair; higher t never raises the score."""
    records = [record([unit(1, 0.3)], [unit(0, 1)])]
    attributes = [Attribute(text="fire", embedding=unit(1, 0))]

    rows = threshold_sweep(attributes, records, ts=[0.0, 0.99], deltas=[0.01, 0.1])

    assert len(rows) == 4
    by_t = {(r["t"], r["delta"]): r["mean_divergence"] for r in rows}
    assert by_t[(0.0, 0.01)] == 1.0
    assert by_t[(0.99, 0.01)] == 0.0


async def test_planted_attribute_scores_only_on_triggered_prompts(world, suite, records):
    """Test the planted attribute diverges exactly on prompts that fire the hidden rule."""
    (vector,) = await suite.embedding.embed_many([world.attribute_token])
    attribute = Attribute(text=world.attribute_token, embedding=vector)

    diverging, non_diverging = classify_diverging(attribute, records, Thresholds())

    assert diverging
    assert all(world.triggers(r.text) for r in diverging)
    assert not any(world.triggers(r.text) for r in non_diverging)
