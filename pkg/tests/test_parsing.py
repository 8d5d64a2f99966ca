"""Tests for model response parsers."""
import pytest

from core.exceptions import ParseError
from services.parsing import (
    canonicalize_hypothesis,
    parse_attribute_response,
    parse_bullets,
    parse_concept_list,
    parse_description,
    parse_hypotheses,
    parse_llm_only,
    parse_numbered,
    parse_prompt_pairs,
    parse_rating,
)


def test_parse_attribute_response_sections():
    """Test bullets are split by model section."""
    text = "Model A contains:\n* flames\n* 'smoke'\n\nModel B contains:\n- water\n"

    model_a, model_b = parse_attribute_response(text)

    assert model_a == ["flames", "smoke"]
    assert model_b == ["water"]


def test_parse_attribute_response_without_b_section():
    """Test a missing model B section yields an empty list."""
    assert parse_attribute_response("model a contains\n* fire") == (["fire"], [])


def test_parse_attribute_response_missing_a():
    """Test the model A section is required."""
    with pytest.raises(ParseError) as exc_info:
        parse_attribute_response("Nothing here")
    assert exc_info.value.raw == "Nothing here"


def test_parse_bullets_ignores_prose():
    """Test only bullet lines are items."""
    assert parse_bullets("Here:\n* one\n• two\nthree\n-   \n") == ["one", "two"]


def test_parse_description_full():
    """Test thought, description and key concepts are separated."""
    text = (
        "Thought Process: the prompts share farm animals.\n"
        "Description: Prompts that mention farm animals.\n"
        'Key Concepts: ["horses", "pigs", cows]'
    )

    description = parse_description(text)

    assert description.thought == "the prompts share farm animals."
    assert description.text == "Prompts that mention farm animals."
    assert description.key_concepts == ["horses", "pigs", "cows"]


def test_parse_description_without_text_uses_concepts():
    """Test a response with only key concepts still yields a description."""
    description = parse_description("Key Concepts: [a, b]")

    assert description.text == "a, b"
    assert description.key_concepts == ["a", "b"]


def test_parse_description_missing_concepts():
    """Test the key concepts section is required."""
    with pytest.raises(ParseError):
        parse_description("Description: something")


def test_parse_concept_list_unbracketed():
    """Test a plain comma list on the first line."""
    assert parse_concept_list(" a dog, 'a cat' \nignored") == ["a dog", "a cat"]


def test_parse_numbered():
    """Test numbered items keep their order."""
    assert parse_numbered("1. a red barn\n2) a dog\nnot an item\n3. \"a cat\"") == ["a red barn", "a dog", "a cat"]


@pytest.mark.parametrize(
    "text, expected",
    [
        ("<rating>3</rating>", 3),
        ("Thinking <rating>1</rating> then <RATING> 2 </RATING>", 2),
    ],
)
def test_parse_rating(text, expected):
    """Test the last rating tag wins."""
    assert parse_rating(text) == expected


@pytest.mark.parametrize("text", ["no tag", "<rating>4</rating>", "<rating>0</rating>"])
def test_parse_rating_invalid(text):
    """Test missing or out-of-range ratings raise."""
    with pytest.raises(ParseError):
        parse_rating(text)


def test_parse_prompt_pairs_drops_unmatched_halves():
    """Test only complete a/b pairs are returned."""
    text = "1a. a barn\n1b. a barn on fire\n2a. a dog\n3b. orphan\n"

    assert parse_prompt_pairs(text) == [("a barn", "a barn on fire")]
    with pytest.raises(ParseError):
        parse_prompt_pairs("2a. a dog")


def test_parse_llm_only():
    """Test attribute lines pair with the following concept line."""
    text = (
        "Visual Attribute: 'flames'\n"
        "Semantic Attributes: ['fire trucks', 'dragons']\n"
        "Visual Attribute: water\n"
    )

    assert parse_llm_only(text) == [("flames", ["fire trucks", "dragons"])]
    with pytest.raises(ParseError):
        parse_llm_only("nothing")


@pytest.mark.parametrize(
    "text, expected",
    [
        ("More of red cars", "red cars"),
        ("Presence of flames (bright)", "flames"),
        ("images with animals, such as dogs and cats", "animals"),
        ('"Dogs"', "dogs"),
    ],
)
def test_canonicalize_hypothesis(text, expected):
    """Test proposer phrasing is reduced to the attribute."""
    assert canonicalize_hypothesis(text) == expected


def test_parse_hypotheses_deduplicates():
    """Test canonical duplicates collapse."""
    assert parse_hypotheses("* more of dogs\n* Dogs\n* cats") == ["dogs", "cats"]
