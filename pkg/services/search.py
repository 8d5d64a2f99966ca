"""
Description search.

Starting from the prompts on which an attribute diverges, repeatedly describe
what diverging prompts share, produce new prompts from that description and
measure how many of them diverge. The best description is the one whose
prompts diverge most often.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from core.dto.config import EarlyStopConfig, SearchConfig, Thresholds
from core.dto.search import CandidateOutcome, DescriptionDTO, IterationTrace, SearchTrace
from core.exceptions import NoDiverging, ParseError, PreconditionError, TooFewCandidates
from core.templates import DESCRIBE_DIVERGING, GENERATE_CANDIDATES, SYSTEM_PROMPT, format_prompt_list
from core.types import Attribute, Description, PromptOrigin, PromptRecord, content_hash, prompt_id
from services.backends.base import BackendSuite, Message
from services.discovery import exact_dedup
from services.divergence import cosine, is_majority, pair_votes
from services.parsing import parse_description, parse_numbered
from services.records import build_records

logger = logging.getLogger(__name__)


@dataclass
class PromptBank:
    """
    Diverging and non-diverging prompts of one attribute.

    Both sides only grow and a prompt is classified once: re-adding a known id
    is a no-op.
    """

    attribute: str
    records: dict[str, PromptRecord] = field(default_factory=dict)
    div: list[str] = field(default_factory=list)
    non: list[str] = field(default_factory=list)
    tags: dict[str, str] = field(default_factory=dict)
    last_div: list[str] = field(default_factory=list)
    last_non: list[str] = field(default_factory=list)

    def add(self, record: PromptRecord, diverging: bool) -> bool:
        if record.id in self.records:
            return False
        self.records[record.id] = record
        (self.div if diverging else self.non).append(record.id)
        self.tags[record.id] = record.origin_label
        return True

    def texts(self, ids: Sequence[str]) -> list[str]:
        return [self.records[i].text for i in ids]

    def __contains__(self, record_id: str) -> bool:
        return record_id in self.records


def seed_bank(attribute: Attribute, records: Sequence[PromptRecord], th: Thresholds) -> PromptBank:
    """
    Classify the initial prompts.

    Raises:
        NoDiverging: If no prompt diverges on the attribute
    """
    bank = PromptBank(attribute=attribute.text)
    for record in records:
        bank.add(record, is_majority(pair_votes(attribute, record, th)))
    if not bank.div:
        raise NoDiverging(attribute.text)
    logger.info(
        f"Seeded bank: {len(bank.div)} diverging, {len(bank.non)} non-diverging",
        extra={"attribute": attribute.text},
    )
    return bank


def _sample_side(ids: list[str], last: list[str], size: int, iteration: int, rng: np.random.Generator) -> list[str]:
    if not ids:
        return []
    if iteration == 0 or not last:
        picks = rng.choice(len(ids), size=min(size, len(ids)), replace=False)
        return [ids[int(i)] for i in picks]
    if len(last) >= size:
        picks = rng.choice(len(last), size=size, replace=False)
        return [last[int(i)] for i in picks]
    recent = set(last)
    rest = [i for i in ids if i not in recent]
    picks = rng.choice(len(rest), size=min(size - len(last), len(rest)), replace=False)
    return list(last) + [rest[int(i)] for i in picks]


def sample_bank(bank: PromptBank, size: int, iteration: int, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    """
    Up to `size` ids from each side.

    The first iteration samples uniformly. Later iterations take the prompts
    the previous iteration added first and fill up at random.
    """
    if not bank.div:
        raise PreconditionError("Cannot sample a bank without diverging prompts")
    if size < 1:
        raise PreconditionError(f"Sample size must be positive, got {size}")
    return (
        _sample_side(bank.div, bank.last_div, size, iteration, rng),
        _sample_side(bank.non, bank.last_non, size, iteration, rng),
    )


@dataclass
class DescribeResult:
    description: Description
    fallback: bool
    conversation: list[Message]


def filter_concepts(concepts: Sequence[str], attribute: str) -> list[str]:
    """Drop concepts that contain the attribute text."""
    needle = attribute.lower()
    return [c for c in concepts if needle not in c.lower()]


async def describe_diverging(
    h_div: Sequence[str],
    h_non: Sequence[str],
    attribute: str,
    suite: BackendSuite,
    previous: Optional[Description] = None,
) -> DescribeResult:
    """
    Describe what the diverging prompts share.

    A response without key concepts is retried once; after that the previous
    description is reused.

    Raises:
        PreconditionError: If h_div is empty
        ParseError: If both attempts fail and there is no previous description
    """
    if not h_div:
        raise PreconditionError("Need at least one diverging prompt to describe")
    user_prompt = DESCRIBE_DIVERGING.format(
        attribute=attribute,
        diverging=format_prompt_list(list(h_div)),
        non_diverging=format_prompt_list(list(h_non)),
    )
    context = {"attribute": attribute, "diverging": list(h_div), "non_diverging": list(h_non)}
    last_error: Optional[ParseError] = None
    for attempt in range(2):
        response = await suite.text.generate_text(
            SYSTEM_PROMPT, user_prompt, purpose="describe", context=context, attempt=attempt
        )
        try:
            description = parse_description(response)
        except ParseError as e:
            logger.warning(f"Unparseable description (attempt {attempt + 1})", extra={"attribute": attribute})
            last_error = e
            continue
        description.key_concepts = filter_concepts(description.key_concepts, attribute)
        conversation: list[Message] = [
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": user_prompt},
            {"role": "assistant", "content": response},
        ]
        return DescribeResult(description, False, conversation)

    if previous is None:
        raise last_error or ParseError("No description")
    logger.warning("Reusing previous description", extra={"attribute": attribute})
    conversation = [
        {"role": "system", "content": SYSTEM_PROMPT},
        {"role": "user", "content": user_prompt},
        {"role": "assistant", "content": previous.raw or previous.as_query()},
    ]
    return DescribeResult(previous, True, conversation)


def _mentions(text: str, attribute: str) -> bool:
    return attribute.lower() in text.lower()


async def generate_candidates(
    description: Description,
    attribute: str,
    bank: PromptBank,
    k: int,
    suite: BackendSuite,
    conversation: list[Message],
) -> list[str]:
    """
    k new prompt texts from the description, in the same conversation.

    Prompts that mention the attribute, repeat one another or are already in
    the bank are rejected.

    Raises:
        TooFewCandidates: If fewer than k survive (carrying the survivors)
    """
    messages = list(conversation) + [{
        "role": "user",
        "content": GENERATE_CANDIDATES.format(k=k, description=description.as_query(), attribute=attribute),
    }]
    context = {"concepts": list(description.key_concepts), "k": k, "attribute": attribute}
    response = await suite.text.chat(messages, purpose="candidates", context=context)

    kept = []
    for text in exact_dedup(parse_numbered(response)):
        if _mentions(text, attribute):
            logger.debug(f"Rejected candidate mentioning the attribute: {text}")
            continue
        if prompt_id(text) in bank:
            continue
        kept.append(text)
    if len(kept) < k:
        raise TooFewCandidates(kept, k)
    return kept[:k]


async def retrieve_candidates(
    description: Description,
    bank: PromptBank,
    exclude: Sequence[str],
    k: int,
    suite: BackendSuite,
) -> list[str]:
    """
    The k bank prompts closest to the description by text embedding, skipping
    the sampled ones; ties go to the lexicographically smaller text.

    Raises:
        TooFewCandidates: If fewer than k prompts are available (carrying their ids)
    """
    excluded = set(exclude)
    pool = [i for i in bank.records if i not in excluded]
    query = await suite.embedding.embed(description.as_query())
    vectors = await suite.embedding.embed_many(bank.texts(pool))
    scored = sorted(
        zip(pool, (cosine(query, v) for v in vectors)),
        key=lambda item: (-item[1], bank.records[item[0]].text),
    )
    chosen = [i for i, _ in scored[:k]]
    if len(chosen) < k:
        raise TooFewCandidates(chosen, k)
    return chosen


def should_stop(sigmas: Sequence[float], early_stop: EarlyStopConfig) -> bool:
    """True once `window` iterations ran and none reached `floor`."""
    return len(sigmas) >= early_stop.window and max(sigmas) < early_stop.floor


def best_iteration(sigmas: Sequence[float]) -> Optional[int]:
    """First index of the maximum."""
    if not sigmas:
        return None
    return int(np.argmax(np.asarray(sigmas)))


def _dto(description: Description) -> DescriptionDTO:
    return DescriptionDTO(**description.to_dict())


def _outcome(record: PromptRecord, attribute: Attribute, th: Thresholds) -> CandidateOutcome:
    votes = pair_votes(attribute, record, th)
    return CandidateOutcome(prompt_id=record.id, text=record.text, votes=votes, diverging=is_majority(votes))


async def search(
    attribute: Attribute,
    records: Sequence[PromptRecord],
    cfg: SearchConfig,
    suite: BackendSuite,
) -> tuple[Optional[Description], SearchTrace]:
    """
    Search for the description whose prompts most often diverge on the attribute.

    Returns:
        (description of the best iteration, full trace)

    Raises:
        NoDiverging: If no initial prompt diverges
    """
    th = cfg.thresholds
    bank = seed_bank(attribute, records, th)
    rng = np.random.default_rng([cfg.seed, int(content_hash(attribute.text)[:8], 16)])
    trace = SearchTrace(attribute=attribute.text, mode=cfg.mode, seed_div=len(bank.div), seed_non=len(bank.non))
    descriptions: list[Description] = []
    previous: Optional[Description] = None
    log_extra = {"attribute": attribute.text}

    for i in range(cfg.iterations):
        h_div, h_non = sample_bank(bank, cfg.sample_size, i, rng)
        described = await describe_diverging(bank.texts(h_div), bank.texts(h_non), attribute.text, suite, previous)
        description = described.description

        too_few = False
        outcomes: list[CandidateOutcome] = []
        new_div: list[str] = []
        new_non: list[str] = []

        if cfg.mode == "generate":
            try:
                texts = await generate_candidates(
                    description, attribute.text, bank, cfg.candidates_per_iter, suite, described.conversation
                )
            except TooFewCandidates as e:
                logger.warning(e.message, extra={**log_extra, "iteration": i})
                texts, too_few = e.candidates, True
            built, refused = await build_records(
                texts, suite, cfg.images_per_prompt, PromptOrigin.GENERATED, iteration=i
            )
            for record in built:
                outcome = _outcome(record, attribute, th)
                outcomes.append(outcome)
                if bank.add(record, outcome.diverging):
                    (new_div if outcome.diverging else new_non).append(record.id)
            outcomes.extend(
                CandidateOutcome(prompt_id=prompt_id(t), text=t, refused=True) for t in refused
            )
        else:
            try:
                ids = await retrieve_candidates(description, bank, h_div + h_non, cfg.candidates_per_iter, suite)
            except TooFewCandidates as e:
                logger.warning(e.message, extra={**log_extra, "iteration": i})
                ids, too_few = e.candidates, True
            for record_id in ids:
                outcome = _outcome(bank.records[record_id], attribute, th)
                outcomes.append(outcome)
                (new_div if outcome.diverging else new_non).append(record_id)

        scored = [o for o in outcomes if not o.refused]
        n_div = sum(1 for o in scored if o.diverging)
        n_can = len(scored)
        sigma = n_div / n_can if n_can else 0.0
        bank.last_div, bank.last_non = new_div, new_non

        trace.iterations.append(IterationTrace(
            index=i,
            description=_dto(description),
            description_fallback=described.fallback,
            sampled_div=h_div,
            sampled_non=h_non,
            candidates=outcomes,
            n_div=n_div,
            n_can=n_can,
            sigma=sigma,
            too_few_candidates=too_few,
        ))
        descriptions.append(description)
        previous = description
        logger.info(f"Iteration {i}: sigma={sigma:.2f} ({n_div}/{n_can})", extra={**log_extra, "iteration": i})

        if should_stop(trace.sigmas, cfg.early_stop):
            trace.terminated_early = True
            logger.info(f"Stopping early after {i + 1} iterations", extra=log_extra)
            break

    trace.best_index = best_iteration(trace.sigmas)
    best = descriptions[trace.best_index] if trace.best_index is not None else None
    return best, trace
