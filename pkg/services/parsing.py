"""Parsers for the response formats requested in core/templates.py."""
import logging
import re

from core.exceptions import ParseError
from core.types import Description

logger = logging.getLogger(__name__)

BULLET = re.compile(r"^\s*[*\-•]\s+(.+?)\s*$")
NUMBERED = re.compile(r"^\s*(\d+)[.)]\s+(.+?)\s*$")
SECTION_A = re.compile(r"model\s+a\s+contains\s*:?", re.IGNORECASE)
SECTION_B = re.compile(r"model\s+b\s+contains\s*:?", re.IGNORECASE)
RATING = re.compile(r"<rating>\s*(\d+)\s*</rating>", re.IGNORECASE)
THOUGHT = re.compile(r"thought\s+process\s*:", re.IGNORECASE)
DESCRIPTION = re.compile(r"^\s*\**description\**\s*:", re.IGNORECASE | re.MULTILINE)
KEY_CONCEPTS = re.compile(r"key\s+concepts\s*:", re.IGNORECASE)
PAIR_LINE = re.compile(r"^\s*(\d+)\s*([ab])[.)]\s*(.+?)\s*$", re.IGNORECASE)
VISUAL_ATTRIBUTE = re.compile(r"visual\s+attribute\s*:\s*(.+)", re.IGNORECASE)
SEMANTIC_ATTRIBUTES = re.compile(r"semantic\s+attributes\s*:\s*(.+)", re.IGNORECASE)

QUOTES = "\"'`“”‘’"


def strip_quotes(text: str) -> str:
    return text.strip().strip(QUOTES).strip()


def parse_bullets(text: str) -> list[str]:
    items = []
    for line in text.splitlines():
        match = BULLET.match(line)
        if match:
            item = strip_quotes(match.group(1))
            if item:
                items.append(item)
    return items


def parse_attribute_response(text: str) -> tuple[list[str], list[str]]:
    """
    Bullets under "Model A contains:" and under "Model B contains:".

    Raises:
        ParseError: If the "Model A contains" section is missing
    """
    match_a = SECTION_A.search(text)
    if not match_a:
        raise ParseError("Response has no 'Model A contains' section", raw=text)
    match_b = SECTION_B.search(text, match_a.end())
    section_a = text[match_a.end(): match_b.start() if match_b else len(text)]
    section_b = text[match_b.end():] if match_b else ""
    return parse_bullets(section_a), parse_bullets(section_b)


def word_count(text: str) -> int:
    return len(text.split())


def parse_concept_list(text: str) -> list[str]:
    """Items of a bracketed, comma-separated list; quotes are optional."""
    body = text.strip()
    end = body.find("]")
    if body.startswith("["):
        body = body[1: end if end != -1 else len(body)]
    else:
        body = body.splitlines()[0] if body else ""
    items = [strip_quotes(part) for part in body.split(",")]
    return [item for item in items if item]


def parse_description(text: str) -> Description:
    """
    Split a describe response into thought, description and key concepts.

    Raises:
        ParseError: If the "Key Concepts:" section is missing
    """
    concepts_match = KEY_CONCEPTS.search(text)
    if not concepts_match:
        raise ParseError("Response has no 'Key Concepts:' section", raw=text)
    head = text[: concepts_match.start()]
    key_concepts = parse_concept_list(text[concepts_match.end():])

    description_match = DESCRIPTION.search(head)
    thought_match = THOUGHT.search(head)
    if description_match:
        description = head[description_match.end():].strip()
        thought_end = description_match.start()
    else:
        description = ""
        thought_end = len(head)
    thought = head[thought_match.end(): thought_end].strip() if thought_match else ""
    if not description:
        description = ", ".join(key_concepts)
    return Description(text=description, key_concepts=key_concepts, thought=thought, raw=text)


def parse_numbered(text: str) -> list[str]:
    """Items of a numbered list, in order."""
    items = []
    for line in text.splitlines():
        match = NUMBERED.match(line)
        if match:
            item = strip_quotes(match.group(2))
            if item:
                items.append(item)
    return items


def parse_rating(text: str) -> int:
    """
    The last <rating>N</rating> in a judge response.

    Raises:
        ParseError: If no rating tag holds 1, 2 or 3
    """
    matches = RATING.findall(text)
    if not matches:
        raise ParseError("Response has no <rating> tag", raw=text)
    rating = int(matches[-1])
    if rating not in (1, 2, 3):
        raise ParseError(f"Rating {rating} is outside 1-3", raw=text)
    return rating


def parse_prompt_pairs(text: str) -> list[tuple[str, str]]:
    """
    "1a." / "1b." lines as (original, altered) pairs; unmatched halves are dropped.

    Raises:
        ParseError: If no complete pair is found
    """
    originals: dict[str, str] = {}
    altered: dict[str, str] = {}
    order: list[str] = []
    for line in text.splitlines():
        match = PAIR_LINE.match(line)
        if not match:
            continue
        number, side, prompt = match.group(1), match.group(2).lower(), strip_quotes(match.group(3))
        if number not in order:
            order.append(number)
        (originals if side == "a" else altered)[number] = prompt
    pairs = [(originals[n], altered[n]) for n in order if n in originals and n in altered]
    if not pairs:
        raise ParseError("Response has no '1a./1b.' prompt pairs", raw=text)
    return pairs


def parse_llm_only(text: str) -> list[tuple[str, list[str]]]:
    """
    "Visual Attribute: '...'" lines, each followed by "Semantic Attributes: [...]".

    Raises:
        ParseError: If no attribute/concepts pair is found
    """
    results: list[tuple[str, list[str]]] = []
    pending: str | None = None
    for line in text.splitlines():
        visual = VISUAL_ATTRIBUTE.search(line)
        if visual:
            pending = strip_quotes(visual.group(1))
            continue
        semantic = SEMANTIC_ATTRIBUTES.search(line)
        if semantic and pending:
            results.append((pending, parse_concept_list(semantic.group(1))))
            pending = None
    if not results:
        raise ParseError("Response lists no 'Visual Attribute' entries", raw=text)
    return results


_HYPOTHESIS_PREFIXES = re.compile(
    r"^(more of|more|presence of|various|images? (with|of|involving)|pictures? (with|of))\s+",
    re.IGNORECASE,
)
_PARENTHETICAL = re.compile(r"\s*\([^)]*\)")
_ENUMERATION = re.compile(r"\s*(,\s*)?(like|such as)\s+.*$", re.IGNORECASE)


def canonicalize_hypothesis(text: str) -> str:
    """Apply the proposer's own correction rules: no 'more of', 'presence of', 'images with', enumerations."""
    result = strip_quotes(text)
    result = _PARENTHETICAL.sub("", result)
    previous = None
    while previous != result:
        previous = result
        result = _HYPOTHESIS_PREFIXES.sub("", result).strip()
    stripped = _ENUMERATION.sub("", result).strip()
    if stripped:
        result = stripped
    return strip_quotes(result).lower()


def parse_hypotheses(text: str) -> list[str]:
    """Canonicalized, de-duplicated bullet hypotheses."""
    seen: set[str] = set()
    hypotheses = []
    for item in parse_bullets(text):
        canonical = canonicalize_hypothesis(item)
        if canonical and canonical not in seen:
            seen.add(canonical)
            hypotheses.append(canonical)
    return hypotheses
