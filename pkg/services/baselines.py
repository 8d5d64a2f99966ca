"""
Comparison methods: TF-IDF over captions or prompts, a single language-model
call over captions, and a caption-pair hypothesis proposer.

Every method returns attributes ranked by services.divergence, so their
scores are comparable with discovery's.
"""
import asyncio
import logging
import math
import re
from dataclasses import dataclass
from typing import Sequence

from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS, CountVectorizer

from core.dto.config import DiscoveryConfig, Thresholds
from core.exceptions import EmptyDocument, NoDiverging, ParseError
from core.templates import CAPTION, LLM_ONLY, SYSTEM_PROMPT, VISDIFF_PROPOSER
from core.types import Attribute, Description, PromptRecord, Provenance
from services.backends.base import BackendSuite
from services.discovery import embed_attributes, exact_dedup, sample_batch
from services.divergence import classify_diverging, rank_attributes
from services.grid import build_strip
from services.parsing import parse_hypotheses, parse_llm_only

logger = logging.getLogger(__name__)

TOKEN = re.compile(r"[a-z0-9]+")
MAX_NGRAM = 3
TOP_N = 5
LLM_ONLY_SAMPLE = 50


@dataclass(frozen=True)
class NgramStat:
    ngram: str
    tfidf_a: float
    tfidf_b: float

    @property
    def gap(self) -> float:
        return self.tfidf_a - self.tfidf_b


@dataclass(frozen=True)
class CaptionPair:
    """One caption per image set of a prompt."""

    prompt: str
    caption_a: str
    caption_b: str


def tokenize(doc: str) -> list[str]:
    """Lowercase word tokens; punctuation is dropped."""
    return TOKEN.findall(doc.lower())


def ngrams(tokens: Sequence[str], max_n: int = MAX_NGRAM) -> list[str]:
    """1..max_n-grams; stopwords are removed from unigrams only."""
    grams = [t for t in tokens if t not in ENGLISH_STOP_WORDS]
    for n in range(2, max_n + 1):
        grams.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return grams


def smoothed_idf(df: int, n_docs: int = 2) -> float:
    """ln((N + 1) / (df + 1)) + 1, so terms in both documents keep a positive weight."""
    return math.log((n_docs + 1) / (df + 1)) + 1


def _tfidf(doc_a: str, doc_b: str) -> list[NgramStat]:
    tokens_a, tokens_b = tokenize(doc_a), tokenize(doc_b)
    docs = [d for d in (tokens_a, tokens_b) if d]
    if not any(ngrams(d) for d in docs):
        return []
    vectorizer = CountVectorizer(analyzer=ngrams, lowercase=False)
    counts = vectorizer.fit_transform([tokens_a, tokens_b]).toarray()
    lengths = (len(tokens_a), len(tokens_b))

    stats = []
    for gram, column in sorted(vectorizer.vocabulary_.items()):
        count_a, count_b = int(counts[0, column]), int(counts[1, column])
        idf = smoothed_idf(int(count_a > 0) + int(count_b > 0))
        tf_a = count_a / lengths[0] if lengths[0] else 0.0
        tf_b = count_b / lengths[1] if lengths[1] else 0.0
        stats.append(NgramStat(gram, tf_a * idf, tf_b * idf))
    return stats


def _top(stats: list[NgramStat], top_n: int) -> list[NgramStat]:
    kept = [s for s in stats if s.tfidf_a > s.tfidf_b]
    kept.sort(key=lambda s: (-s.gap, s.ngram))
    return kept[:top_n]


def tfidf_rank(doc_a: str, doc_b: str, top_n: int = TOP_N) -> list[NgramStat]:
    """
    N-grams weighted higher in doc_a than in doc_b, largest gap first.

    tf is the raw count over the document's token count.

    Raises:
        EmptyDocument: If either document has no tokens
    """
    if not tokenize(doc_a):
        raise EmptyDocument("Document A is empty")
    if not tokenize(doc_b):
        raise EmptyDocument("Document B is empty")
    return _top(_tfidf(doc_a, doc_b), top_n)


async def _caption(images, prompt: str, suite: BackendSuite, cell_px: int) -> str:
    strip = build_strip(images, cell_px, with_raster=suite.vision.requires_raster)
    return await suite.vision.describe_image_grid(strip, CAPTION.format(prompt=prompt), purpose="caption")


async def caption_records(records: Sequence[PromptRecord], suite: BackendSuite, cell_px: int = 512) -> list[CaptionPair]:
    """One caption per model per prompt."""
    async def one(record: PromptRecord) -> CaptionPair:
        caption_a, caption_b = await asyncio.gather(
            _caption(record.images_a, record.text, suite, cell_px),
            _caption(record.images_b, record.text, suite, cell_px),
        )
        return CaptionPair(record.text, caption_a, caption_b)

    return list(await asyncio.gather(*(one(r) for r in records)))


async def tfidf_attr_discovery(
    records: Sequence[PromptRecord],
    suite: BackendSuite,
    th: Thresholds,
    cfg: DiscoveryConfig,
) -> list[Attribute]:
    """Top n-grams of model A captions against model B captions, ranked by divergence."""
    batch = sample_batch(records, cfg.batch_size, cfg.seed)
    captions = await caption_records(batch, suite, cfg.cell_px)
    doc_a = "\n".join(c.caption_a for c in captions)
    doc_b = "\n".join(c.caption_b for c in captions)
    stats = tfidf_rank(doc_a, doc_b, TOP_N)
    if not stats:
        return []
    attributes = await embed_attributes(
        [s.ngram for s in stats], suite.embedding, cfg.attribute_template, Provenance.TFIDF
    )
    return rank_attributes(attributes, records, th, cfg.aggregation)


def tfidf_desc_discovery(attribute: Attribute, records: Sequence[PromptRecord], th: Thresholds) -> Description:
    """
    Description from the n-grams over-represented in diverging prompts.

    Raises:
        NoDiverging: If no prompt diverges on the attribute
    """
    diverging, non_diverging = classify_diverging(attribute, records, th)
    if not diverging:
        raise NoDiverging(attribute.text)
    doc_div = "\n".join(r.text for r in diverging)
    doc_non = "\n".join(r.text for r in non_diverging)
    concepts = [s.ngram for s in _top(_tfidf(doc_div, doc_non), TOP_N)]
    return Description(text=", ".join(concepts), key_concepts=concepts)


def _triples_block(captions: Sequence[CaptionPair]) -> str:
    return "\n\n".join(
        f"Prompt: {c.prompt}\nModel A caption: {c.caption_a}\nModel B caption: {c.caption_b}" for c in captions
    )


async def llm_only(
    records: Sequence[PromptRecord],
    suite: BackendSuite,
    th: Thresholds,
    cfg: DiscoveryConfig,
) -> list[tuple[Attribute, Description]]:
    """
    Attributes and their prompt concepts from one language-model call over
    (prompt, caption A, caption B) triples. A malformed response yields [].
    """
    if len(records) < LLM_ONLY_SAMPLE:
        logger.info(f"Only {len(records)} prompts available for the LLM-only sample")
    sample = sample_batch(records, LLM_ONLY_SAMPLE, cfg.seed)
    captions = await caption_records(sample, suite, cfg.cell_px)
    response = await suite.text.generate_text(
        SYSTEM_PROMPT,
        LLM_ONLY.format(triples=_triples_block(captions)),
        purpose="llm_only",
        context={"triples": [[c.prompt, c.caption_a, c.caption_b] for c in captions]},
    )
    try:
        pairs = parse_llm_only(response)[:TOP_N]
    except ParseError as e:
        logger.warning(f"LLM-only response unparseable: {e.message}")
        return []

    concepts = {}
    for text, items in pairs:
        concepts.setdefault(text, items)
    texts = exact_dedup(concepts)
    attributes = await embed_attributes(texts, suite.embedding, cfg.attribute_template, Provenance.LLM_ONLY)
    ranked = rank_attributes(attributes, records, th, cfg.aggregation)
    return [
        (a, Description(text=", ".join(concepts[a.text]), key_concepts=list(concepts[a.text])))
        for a in ranked
    ]


async def visdiff_attrs(
    records: Sequence[PromptRecord],
    suite: BackendSuite,
    th: Thresholds,
    cfg: DiscoveryConfig,
) -> list[Attribute]:
    """Hypotheses proposed from caption pairs, canonicalized and ranked by divergence."""
    batch = sample_batch(records, cfg.batch_size, cfg.seed)
    captions = await caption_records(batch, suite, cfg.cell_px)
    text = "\n\n".join(f"Group A: {c.caption_a}\nGroup B: {c.caption_b}" for c in captions)
    response = await suite.text.generate_text(
        SYSTEM_PROMPT,
        VISDIFF_PROPOSER.format(text=text),
        purpose="visdiff",
        context={"pairs": [[c.caption_a, c.caption_b] for c in captions]},
    )
    hypotheses = parse_hypotheses(response)
    if not hypotheses:
        logger.warning("Proposer returned no hypotheses")
        return []
    attributes = await embed_attributes(hypotheses, suite.embedding, cfg.attribute_template, Provenance.VISDIFF)
    return rank_attributes(attributes, records, th, cfg.aggregation)
