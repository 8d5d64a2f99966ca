"""Tests for judge scoring, top-k aggregation and rater agreement."""
import json

import numpy as np
import pytest
from sklearn.metrics import cohen_kappa_score

from core.dto.dataset import RepresentationSpec
from core.dto.evaluation import RepresentationPrediction, TopK
from core.exceptions import ConfigError, LengthMismatch, PreconditionError
from services.evaluation import (
    aggregate_topk,
    judge_attribute,
    judge_description,
    kappa_report,
    load_predictions,
    prefix_max,
    weighted_kappa,
    write_eval_report,
)


@pytest.mark.parametrize(
    "pred, truth, expected",
    [
        ("nature", "dark clouds", 0.0),
        ("nature", "green color palette", 0.5),
        ("flames", "a red color palette", 0.5),
        ("nature", "beautiful landscapes", 1.0),
        ("fire", "fire", 1.0),
    ],
)
async def test_judge_attribute_anchors(suite, pred, truth, expected):
    """Test attribute ratings map 1/2/3 to 0/0.5/1."""
    score = await judge_attribute(pred, truth, suite.text)

    assert score.mapped == expected
    assert not score.flagged


@pytest.mark.parametrize(
    "pred, expected",
    [
        (["a car", "a tree"], 0.0),
        (["an animal laying down"], 0.5),
        (["a feline", "a puppy", "a pet"], 1.0),
    ],
)
async def test_judge_description_anchors(suite, pred, expected):
    """Test description ratings against the rubric examples."""
    score = await judge_description(pred, ["a cat", "a dog"], suite.text)

    assert score.mapped == expected


async def test_judge_unparseable_defaults_to_lowest(scripted):
    """Test two responses without a rating give rating 1, flagged."""
    backend = scripted(["They look similar.", "Quite similar really."])

    score = await judge_attribute("fire", "flames", backend)

    assert score.rating == 1
    assert score.flagged
    assert backend.calls == 2


async def test_judge_empty_input(suite):
    """Test judging needs both sides."""
    with pytest.raises(PreconditionError):
        await judge_attribute("", "fire", suite.text)
    with pytest.raises(PreconditionError):
        await judge_description([], ["a dog"], suite.text)


def test_top5_never_below_top1():
    """Test the five-prefix maximum dominates the first score on random score lists."""
    rng = np.random.default_rng(0)
    for _ in range(100):
        scores = list(rng.choice([0.0, 0.5, 1.0], size=int(rng.integers(0, 8))))
        top = TopK(top1=prefix_max(scores, 1), top5=prefix_max(scores, 5))

        assert top.top5 >= top.top1
    assert prefix_max([], 5) == 0.0


def test_topk_rejects_inverted_scores():
    """Test a report with top5 below top1 is invalid."""
    with pytest.raises(ValueError):
        TopK(top1=1.0, top5=0.5)


async def test_aggregate_topk(suite):
    """Test top-k means over representations, with a missing prediction scoring 0."""
    truths = [
        RepresentationSpec(attribute="fire", concepts=["a cat", "a dog"]),
        RepresentationSpec(attribute="nature", concepts=["a car"]),
    ]
    predictions = [
        RepresentationPrediction(
            truth_attribute="fire",
            attributes=["water", "fire"],
            descriptions=[["a car", "a tree"], ["a feline", "a puppy", "a pet"]],
        ),
    ]

    report = await aggregate_topk(predictions, truths, suite.text)

    first, second = report.results
    assert first.attribute.top1 == 0.0
    assert first.attribute.top5 == 1.0
    assert first.description.top1 == 0.0
    assert first.description.top5 == 1.0
    assert second.attribute == TopK()
    assert report.attribute.top5 == 0.5
    assert report.attribute.top1 == 0.0


def test_kappa_identical_raters():
    """Test identical ratings agree perfectly, including a constant rater pair."""
    assert weighted_kappa([1, 2, 3, 2], [1, 2, 3, 2]) == pytest.approx(1.0)
    assert weighted_kappa([2, 2, 2], [2, 2, 2]) == 1.0


def test_kappa_hand_computed():
    """Test one disagreement of two steps out of four ratings gives 0.5."""
    assert weighted_kappa([1, 2, 3, 1], [1, 2, 3, 3]) == pytest.approx(0.5)


def test_kappa_matches_sklearn():
    """Test both weightings against scikit-learn on random rating vectors."""
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.integers(1, 4, size=50)
        y = np.where(rng.random(50) < 0.6, x, rng.integers(1, 4, size=50))
        for weights in ("linear", "quadratic"):
            expected = cohen_kappa_score(x, y, labels=[1, 2, 3], weights=weights)
            assert weighted_kappa(list(x), list(y), weights) == pytest.approx(expected)


def test_kappa_independent_raters_near_zero():
    """Test independent uniform raters have kappa near 0."""
    rng = np.random.default_rng(0)
    x = rng.integers(1, 4, size=10_000)
    y = rng.integers(1, 4, size=10_000)

    assert abs(weighted_kappa(x, y)) < 0.05


def test_kappa_preconditions():
    """Test length, size and range checks."""
    with pytest.raises(LengthMismatch):
        weighted_kappa([1, 2], [1, 2, 3])
    with pytest.raises(PreconditionError):
        weighted_kappa([1], [1])
    with pytest.raises(PreconditionError):
        weighted_kappa([1, 4], [1, 2])


def test_kappa_report_has_both_weightings():
    """Test the report lists linear and quadratic kappa."""
    assert set(kappa_report([1, 2, 3], [1, 2, 2])) == {"linear", "quadratic"}


def test_load_predictions(tmp_path):
    """Test predictions load and bad files are configuration errors."""
    path = tmp_path / "pred.json"
    path.write_text(json.dumps([{"truth_attribute": "fire", "attributes": ["flames"], "descriptions": [["a dog"]]}]))

    (prediction,) = load_predictions(path)
    assert prediction.attributes == ["flames"]

    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_predictions(path)
    with pytest.raises(ConfigError):
        load_predictions(tmp_path / "missing.json")


async def test_write_eval_report(suite, tmp_path):
    """Test the written report carries kappa and sorted keys."""
    truths = [RepresentationSpec(attribute="fire", concepts=["a dog"])]
    report = await aggregate_topk([], truths, suite.text)

    path = write_eval_report(report, tmp_path / "eval.json", kappa={"linear": 0.5})

    data = json.loads(path.read_text())
    assert data["kappa"] == {"linear": 0.5}
    assert list(data) == sorted(data)
