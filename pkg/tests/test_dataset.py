"""Tests for benchmark bundle generation, storage and validation."""
import json
from pathlib import Path

import numpy as np
import pytest
import pytest_asyncio

from core.dto.config import DatasetConfig, RunConfig, Thresholds
from core.dto.dataset import RepresentationSpec
from core.exceptions import CountMismatch, ManifestError
from services.backends import build_sim_suite
from services.cache import CacheStore
from services.dataset import (
    DISTRACTORS,
    MANIFEST,
    PAIRS,
    build_bundle,
    bundle_records,
    gen_prompt_pairs,
    load_bundle,
    load_representations,
    templated_prompts,
    token_edit_distance,
    validate_bundle,
    write_bundle,
)
from services.discovery import embed_attributes
from services.divergence import rank_attributes
from services.evaluation import evaluate_bundle, planted_attribute_score
from services.sim.world import make_world

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest_asyncio.fixture
async def bundle(world, suite):
    """Default-size sim bundle for the planted representation."""
    return await build_bundle(world.spec(), suite, DatasetConfig(), world=world)


def test_templated_prompts():
    """Test the distractor bank holds every style, adjective and subject combination once."""
    prompts = templated_prompts()

    assert len(prompts) == 729
    assert len(set(prompts)) == 729
    assert "An oil painting of a happy dog" in prompts


def test_token_edit_distance():
    """Test normalized token edit distance."""
    assert token_edit_distance("a red barn", "a red barn") == 0.0
    assert token_edit_distance("a red barn", "a red barn flames") == pytest.approx(0.25)
    assert token_edit_distance("dog", "cat") == 1.0
    assert token_edit_distance("", "") == 0.0


async def test_gen_prompt_pairs_retries_and_rejects(scripted):
    """Test a malformed batch is retried then skipped, and originals naming the attribute are dropped."""
    suite = build_sim_suite(make_world(50, 2, seed=1))
    suite.text = scripted([
        "Sorry, here are none.",
        "Still nothing.",
        "1a. flames over a barn\n1b. flames over a red barn\n2a. a dog on a hill\n2b. a dog on a hill with flames",
    ])
    spec = RepresentationSpec(attribute="flames", concepts=["dog"])

    pairs = await gen_prompt_pairs(spec, 1, suite, batch=5)

    assert pairs == [("a dog on a hill", "a dog on a hill with flames")]
    assert suite.text.calls == 3
    last_request = suite.text.requests[-1][1][-1]["content"]
    assert last_request.startswith("Write 1 more pairs")


async def test_bundle_counts(world, bundle):
    """Test a default bundle has 50 pairs, 3 images per prompt and 200 distractors."""
    manifest = bundle.manifest

    assert manifest.counts.pairs == 50
    assert manifest.counts.images_per_prompt == 3
    assert manifest.counts.distractors == 200
    assert manifest.complete
    assert manifest.spec.attribute == world.attribute_token
    assert all(len(r.images_a) == len(r.images_b) == 3 for r in bundle.pairs)
    assert not any(world.attribute_token in r.prompt for r in bundle.pairs)
    assert all(r.altered_prompt.endswith(world.attribute_token) for r in bundle.pairs)
    assert not manifest.flagged_pairs


async def test_bundle_round_trip(bundle, tmp_path):
    """Test a written bundle loads back unchanged."""
    target = write_bundle(bundle, tmp_path / "bundle")

    loaded = load_bundle(target)

    assert loaded.manifest == bundle.manifest
    assert loaded.pairs == bundle.pairs
    assert loaded.distractors == bundle.distractors


async def test_load_bundle_count_mismatch(bundle, tmp_path):
    """Test a manifest that disagrees with the pair file is rejected."""
    target = write_bundle(bundle, tmp_path / "bundle")
    manifest = json.loads((target / MANIFEST).read_text())
    manifest["counts"]["pairs"] = 49
    (target / MANIFEST).write_text(json.dumps(manifest))

    with pytest.raises(CountMismatch):
        load_bundle(target)


async def test_load_bundle_truncated_distractors(bundle, tmp_path):
    """Test a missing distractor line is a count mismatch."""
    target = write_bundle(bundle, tmp_path / "bundle")
    lines = (target / DISTRACTORS).read_text().splitlines()
    (target / DISTRACTORS).write_text("\n".join(lines[:-1]) + "\n")

    with pytest.raises(CountMismatch):
        load_bundle(target)


async def test_load_bundle_leaked_attribute(world, bundle, tmp_path):
    """Test an original prompt naming the attribute is rejected."""
    target = write_bundle(bundle, tmp_path / "bundle")
    rows = [json.loads(line) for line in (target / PAIRS).read_text().splitlines()]
    rows[0]["prompt"] = f"{rows[0]['prompt']} {world.attribute_token}"
    (target / PAIRS).write_text("".join(json.dumps(r) + "\n" for r in rows))

    with pytest.raises(ManifestError):
        load_bundle(target)


async def test_load_bundle_missing_live_images(bundle, tmp_path):
    """Test a live bundle without its image files names the missing ids."""
    target = write_bundle(bundle, tmp_path / "bundle")
    manifest = json.loads((target / MANIFEST).read_text())
    manifest["live"] = True
    (target / MANIFEST).write_text(json.dumps(manifest))

    with pytest.raises(ManifestError) as exc_info:
        load_bundle(target)

    assert bundle.pairs[0].images_a[0]["id"] in exc_info.value.details["image_ids"]


def test_load_bundle_missing_manifest(tmp_path):
    """Test a directory without a manifest is not a bundle."""
    with pytest.raises(ManifestError):
        load_bundle(tmp_path)


async def test_validate_bundle(world, suite, bundle):
    """Test every pair diverges on the attribute and no distractor does."""
    result = await validate_bundle(bundle, suite, Thresholds(t=0.2, delta=0.05))

    assert result.diverging_fraction == 1.0
    assert result.distractor_rate == 0.0
    assert result.accepted


@pytest.mark.slow
async def test_unplanted_attributes_do_not_diverge():
    """Test random non-planted tokens stay below 0.05 while the planted attribute scores at least 0.15."""
    th = Thresholds(t=0.2, delta=0.05)
    cfg = DatasetConfig(n_prompts=20, distractors=20, min_valid_pairs=0)
    for seed in range(10):
        world = make_world(200, 3, seed)
        suite = build_sim_suite(world, CacheStore())
        bundle = await build_bundle(world.spec(), suite, cfg, world=world)
        pairs, _ = await bundle_records(bundle, suite)
        rng = np.random.default_rng(seed)
        tokens = [str(t) for t in rng.choice(world.neutral, size=5, replace=False)]

        ranked = rank_attributes(await embed_attributes(tokens, suite.embedding), pairs, th)

        assert max(a.mean_divergence for a in ranked) < 0.05
        assert await planted_attribute_score(bundle, suite, RunConfig()) >= 0.15


async def test_evaluate_bundle_recovers_planted_attribute(suite, bundle):
    """Test discovery on a bundle predicts its own attribute first."""
    result = await evaluate_bundle(bundle, suite, RunConfig())

    assert result.best_attribute == bundle.spec.attribute
    assert result.attribute.top1 == 1.0
    assert result.description.top5 >= result.description.top1


def test_load_representations():
    """Test the shipped representation list parses."""
    specs = load_representations(DATA_DIR / "id2_representations.json")

    assert len(specs) == 60
    assert {s.category for s in specs} <= {"related", "abstract", "bias", "manual"}


def test_load_representations_missing(tmp_path):
    """Test a missing representation file is a manifest error."""
    with pytest.raises(ManifestError):
        load_representations(tmp_path / "none.json")
