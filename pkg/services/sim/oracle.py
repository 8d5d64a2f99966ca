"""
Offline surrogates for every model capability, answered from a SimWorld.

Each function is pure given the world; randomness comes from
`SimWorld.rng(operation, key)` so results do not depend on call order.
The render_* helpers write responses in the same formats the live models are
asked for, so the simulator goes through the same parsers.
"""
from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS

from core.exceptions import EmptyBank
from core.templates import ATTRIBUTE_RUBRIC, DESCRIPTION_RUBRIC
from core.types import Embedding, ImageHandle, content_hash
from services.sim.world import SimPrompt, SimWorld, tokenize

CAPTION_PREFIX = "an image of"


# ============== Embeddings ==============

def _bag(world: SimWorld, tokens: Iterable[str]) -> np.ndarray:
    counts = np.zeros(world.dim, dtype=np.float64)
    for token in tokens:
        counts[world.token_index(token)] += 1.0
    if not counts.any():
        counts[world.unknown_index] = 1.0
    return counts


def sim_text_embedding(world: SimWorld, text: str) -> Embedding:
    """Normalized bag of tokens; out-of-vocabulary tokens share the last slot."""
    return Embedding.from_vector(_bag(world, tokenize(text)))


def sim_image_embedding(world: SimWorld, prompt: SimPrompt | str, model_tag: str, seed: int) -> Embedding:
    """
    Embedding of the image model `model_tag` renders for prompt and seed.

    Model A adds `attribute_weight` along the attribute axis when the prompt
    triggers the hidden rule. Jitter of scale `noise_sigma` is seeded by
    (prompt, model, seed).
    """
    text = prompt.text if isinstance(prompt, SimPrompt) else prompt
    vector = _bag(world, tokenize(text))
    vector /= np.linalg.norm(vector)
    if model_tag == "A" and world.triggers(text):
        vector[world.token_index(world.attribute_token)] += world.attribute_weight
        vector /= np.linalg.norm(vector)
    if world.noise_sigma > 0:
        jitter = world.rng("image", f"{model_tag}|{seed}|{text}").standard_normal(world.dim)
        vector = vector + world.noise_sigma * jitter
    return Embedding.from_vector(vector)


def rendered_tokens(world: SimWorld, handle: ImageHandle) -> set[str]:
    """Tokens visible in a sim image: the prompt's, plus the attribute when model A fires."""
    prompt = handle.source_prompt or ""
    tokens = set(tokenize(prompt))
    if handle.model_tag == "A" and world.triggers(prompt):
        tokens.add(world.attribute_token)
    return tokens


# ============== Vision ==============

def sim_propose_attributes(world: SimWorld, grid: ImageHandle) -> tuple[list[str], list[str]]:
    """
    Attributes over-represented in the top row of a grid, and in the bottom row.

    The top row is the first half of `grid.members`. With probability
    `proposal_error_rate` the planted attribute is swapped for a random token.
    """
    half = len(grid.members) // 2
    top, bottom = grid.members[:half], grid.members[half:]
    if [h.id for h in top] == [h.id for h in bottom]:
        return [], []

    top_tokens = set().union(*(rendered_tokens(world, h) for h in top)) if top else set()
    bottom_tokens = set().union(*(rendered_tokens(world, h) for h in bottom)) if bottom else set()
    rng = world.rng("propose", grid.id)

    proposals: list[str] = []
    for token in sorted(top_tokens - bottom_tokens):
        if token == world.attribute_token and rng.random() < world.proposal_error_rate:
            token = str(rng.choice(world.neutral))
        if token not in proposals:
            proposals.append(token)

    count = min(world.distractor_count, len(world.neutral))
    for token in rng.choice(world.neutral, size=count, replace=False):
        if str(token) not in proposals:
            proposals.append(str(token))
    return proposals, sorted(bottom_tokens - top_tokens)


def sim_caption(world: SimWorld, images: Sequence[ImageHandle]) -> str:
    """One caption for a set of images of the same prompt and model."""
    tokens = set().union(*(rendered_tokens(world, h) for h in images)) if images else set()
    return f"{CAPTION_PREFIX} {' '.join(sorted(tokens))}".strip()


def caption_tokens(caption: str) -> set[str]:
    return set(tokenize(caption)) - set(tokenize(CAPTION_PREFIX))


# ============== Description search ==============

def _document_frequency(prompts: Sequence[str]) -> Counter:
    counts: Counter = Counter()
    for prompt in prompts:
        counts.update(set(tokenize(prompt)))
    return counts


def sim_describe(
    world: SimWorld,
    diverging: Sequence[str],
    non_diverging: Sequence[str],
    attribute: str,
    key: str,
) -> list[str]:
    """
    Key concepts shared by diverging prompts: the top tokens by document
    frequency gap between the two sides, excluding the attribute.

    Raises:
        EmptyBank: If both prompt lists are empty
    """
    if not diverging and not non_diverging:
        raise EmptyBank()

    excluded = set(tokenize(attribute))
    div_freq = _document_frequency(diverging)
    non_freq = _document_frequency(non_diverging)
    n_div = max(len(diverging), 1)
    n_non = max(len(non_diverging), 1)

    gaps = [
        (div_freq[t] / n_div - non_freq[t] / n_non, t)
        for t in div_freq
        if t not in excluded
    ]
    gaps.sort(key=lambda item: (-item[0], item[1]))
    concepts = [t for _, t in gaps[: world.describe_top_j]]

    rng = world.rng("describe", key)
    if rng.random() < world.description_error_rate:
        present = set(div_freq)
        pool = [t for t in world.neutral if t not in present and t not in excluded]
        size = min(world.describe_top_j, len(pool))
        concepts = sorted(str(t) for t in rng.choice(pool, size=size, replace=False))
    return concepts


def sim_candidates(world: SimWorld, concepts: Sequence[str], k: int, attribute: str, key: str) -> list[str]:
    """
    k distinct prompts, each with one or two description tokens and
    `filler_count` neutral tokens.
    """
    excluded = set(tokenize(attribute))
    tokens: list[str] = []
    for concept in concepts:
        for token in tokenize(concept):
            if token in world.index and token not in excluded and token not in tokens:
                tokens.append(token)

    rng = world.rng("candidates", key)
    prompts: list[str] = []
    for _ in range(k * 20):
        if len(prompts) >= k:
            break
        chosen: list[str] = []
        if tokens:
            n = int(rng.integers(1, min(2, len(tokens)) + 1))
            chosen = [str(t) for t in rng.choice(tokens, size=n, replace=False)]
        pool = [t for t in world.neutral if t not in chosen]
        size = min(world.filler_count, len(pool))
        filler = [str(t) for t in rng.choice(pool, size=size, replace=False)]
        words = chosen + filler
        rng.shuffle(words)
        text = " ".join(words)
        if text and text not in prompts:
            prompts.append(text)
    return prompts


# ============== Judging and dedup ==============

def _content_words(text: str) -> set[str]:
    return {t for t in tokenize(text) if t not in ENGLISH_STOP_WORDS}


def _token_rating(left: set[str], right: set[str]) -> int:
    if left and left == right:
        return 3
    if left & right:
        return 2
    return 1


def sim_judge_attribute(pred: str, truth: str) -> int:
    """Rubric anchors first, then exact content-word match 3, overlap 2, else 1."""
    a, b = pred.strip().lower(), truth.strip().lower()
    for pair in ((a, b), (b, a)):
        if pair in ATTRIBUTE_RUBRIC:
            return ATTRIBUTE_RUBRIC[pair]
    if a == b:
        return 3
    return _token_rating(_content_words(a), _content_words(b))


def sim_judge_description(pred: Sequence[str], truth: Sequence[str]) -> int:
    left = frozenset(c.strip().lower() for c in pred)
    right = frozenset(c.strip().lower() for c in truth)
    for pair in ((left, right), (right, left)):
        if pair in DESCRIPTION_RUBRIC:
            return DESCRIPTION_RUBRIC[pair]
    if left == right:
        return 3
    words_left = set().union(*(_content_words(c) for c in left)) if left else set()
    words_right = set().union(*(_content_words(c) for c in right)) if right else set()
    return _token_rating(words_left, words_right)


def sim_dedup(attributes: Sequence[str]) -> list[str]:
    """Exact merge after lowercasing and whitespace collapse; first spelling wins."""
    seen: set[str] = set()
    kept: list[str] = []
    for attribute in attributes:
        canonical = " ".join(attribute.lower().split())
        if canonical and canonical not in seen:
            seen.add(canonical)
            kept.append(attribute)
    return kept


# ============== Dataset and baselines ==============

def sim_prompt_pairs(
    world: SimWorld,
    concepts: Sequence[str],
    attribute: str,
    count: int,
    key: str,
) -> list[tuple[str, str]]:
    """Original prompts of concept words plus neutral filler; the altered prompt appends the attribute."""
    words: list[str] = []
    for concept in concepts:
        for token in tokenize(concept):
            if token not in words:
                words.append(token)
    rng = world.rng("pairs", key)
    pairs: list[tuple[str, str]] = []
    for _ in range(count):
        k = int(rng.integers(1, len(words) + 1)) if words else 0
        chosen = [str(t) for t in rng.choice(words, size=k, replace=False)] if k else []
        size = max(world.prompt_length - k, 1)
        filler = [str(t) for t in rng.choice(world.neutral, size=size, replace=False)]
        tokens = chosen + filler
        rng.shuffle(tokens)
        original = " ".join(tokens)
        pairs.append((original, f"{original} {attribute}"))
    return pairs


def sim_llm_only(
    world: SimWorld,
    triples: Sequence[tuple[str, str, str]],
    top_n: int = 5,
) -> list[tuple[str, list[str]]]:
    """Attributes found in model A captions but not B, with the prompt words that co-occur with them."""
    per_prompt: list[tuple[str, set[str]]] = []
    counts: Counter = Counter()
    for prompt, caption_a, caption_b in triples:
        diff = caption_tokens(caption_a) - caption_tokens(caption_b)
        per_prompt.append((prompt, diff))
        counts.update(diff)

    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))[:top_n]
    results = []
    for attribute, _ in ranked:
        with_attr = [p for p, diff in per_prompt if attribute in diff]
        without = [p for p, diff in per_prompt if attribute not in diff]
        concepts = sim_describe(world, with_attr, without, attribute, key=f"llm_only|{attribute}")
        results.append((attribute, concepts))
    return results


def sim_visdiff(pairs: Sequence[tuple[str, str]]) -> list[str]:
    """Caption tokens seen more often in group A, most frequent first."""
    counts: Counter = Counter()
    for caption_a, caption_b in pairs:
        counts.update(caption_tokens(caption_a) - caption_tokens(caption_b))
    return [t for t, _ in sorted(counts.items(), key=lambda item: (-item[1], item[0]))]


# ============== Response rendering ==============

def render_bullets(items: Sequence[str]) -> str:
    return "\n".join(f"* {item}" for item in items)


def render_attribute_response(model_a: Sequence[str], model_b: Sequence[str]) -> str:
    return (
        f"Model A contains:\n{render_bullets(model_a)}\n\n"
        f"Model B contains:\n{render_bullets(model_b)}\n"
    )


def render_description(concepts: Sequence[str], n_div: int, n_non: int) -> str:
    listed = ", ".join(concepts)
    thought = (
        f"Compared {n_div} diverging and {n_non} non-diverging prompts; "
        f"these words are much more frequent on the diverging side: {listed or 'none'}."
    )
    description = f"Prompts that mention {listed}." if concepts else "No concept separates the two sets."
    return (
        f"Thought Process: {thought}\n\n"
        f"Description: {description}\n\n"
        f"Key Concepts: [{listed}]\n"
    )


def render_numbered(items: Sequence[str]) -> str:
    return "\n".join(f"{i}. {item}" for i, item in enumerate(items, start=1))


def render_rating(rating: int) -> str:
    return f"Both items were compared token by token.\n<rating>{rating}</rating>"


def render_pairs(pairs: Sequence[tuple[str, str]]) -> str:
    return "\n\n".join(f"{i}a. {p}\n{i}b. {alt}" for i, (p, alt) in enumerate(pairs, start=1))


def render_llm_only(results: Sequence[tuple[str, Sequence[str]]]) -> str:
    blocks = [
        f"{i}. Visual Attribute: '{attribute}'\nSemantic Attributes: [{', '.join(repr(c) for c in concepts)}]"
        for i, (attribute, concepts) in enumerate(results, start=1)
    ]
    return "Compared the captions of both models.\n\n" + "\n\n".join(blocks)


def render_visdiff(hypotheses: Sequence[str]) -> str:
    return "\n".join(f'* "{h}"' for h in hypotheses)


def conversation_key(*parts: str) -> str:
    return content_hash(*parts)[:32]
