"""
Instruction prompts sent to the language and vision models.

The response formats requested here are the ones services/parsing.py reads,
and the offline simulator answers in the same formats.
"""

SYSTEM_PROMPT = "You are a careful assistant helping to compare the behaviour of two text-to-image models."

# ============== Attribute discovery ==============

ATTRIBUTE_DISCOVERY = """\
The image shows images from two text-to-image models generated from the same prompt.
Model A's images are in the top row and Model B's images are in the bottom row.
Prompt: {prompt}

List visual attributes that appear more in Model A's images than in Model B's images.
Consider subjects, objects, people, background, style, composition, possible biases,
artifacts and generation errors; anything a person would notice counts.
The attributes will be checked with an image-text embedding model over many more images,
so each attribute must be {max_words} words or fewer. Use one bullet "*" per attribute
and answer in exactly this format:

Model A contains:
* ATTRIBUTE
* ATTRIBUTE

Model B contains:
* ATTRIBUTE
* ATTRIBUTE
"""

ATTRIBUTE_DEDUP = """\
Below is a list of visual attributes. Remove attributes that mean the same thing as an
earlier attribute in the list (for example "fire" after "flames") and keep the wording of
the attribute you keep unchanged. Answer with one bullet "*" per remaining attribute and nothing else.

{attributes}
"""

# ============== Description search ==============

DESCRIBE_DIVERGING = """\
I am comparing two text-to-image models, A and B. For the prompts below (diverging prompts),
images from model A contain "{attribute}" while images from model B for the same prompt do not.

Diverging prompts:
{diverging}

For these prompts the difference does not appear (non-diverging prompts):
{non_diverging}

Describe the concepts that many diverging prompts share and that are mostly absent from the
non-diverging prompts. Ignore concepts that directly reference "{attribute}". The description
must be clear enough for someone to write new diverging prompts from it. Mention words or phrases
that are much more frequent in the diverging prompts. Reason step by step first.

Answer in three separate paragraphs:

Thought Process: <your reasoning about the two prompt sets>

Description: <what makes a prompt diverging>

Key Concepts: [<concept of 1-3 words>, <concept of 1-3 words>, ...]
"""

GENERATE_CANDIDATES = """\
Write {k} new text-to-image prompts that are likely to be diverging according to this description:
{description}

The prompts must differ from the prompts seen so far and cover varied topics, styles and concepts
while following the description. They must NOT mention "{attribute}" or anything directly related
to "{attribute}". Keep each prompt to one sentence.

Answer as a numbered list:
1. PROMPT
2. PROMPT
"""

# ============== Evaluation ==============

ATTRIBUTE_JUDGE = """\
You inspect images and decide which visual attributes they show. Rate from 1 to 3 how similar
two visual attributes are, considering whether a person would see them as related and whether
images showing one would also show the other.

- 1: unrelated; images with one would not show the other. Example: ("nature", "dark clouds")
- 2: related or one is a subset of the other. Examples: ("nature", "green color palette"),
  ("nature", "waterfalls"), ("nature", "animals"), ("nature", "people hiking at a national park")
- 3: nearly the same; images with one would very likely show the other.
  Examples: ("nature", "beautiful landscapes"), ("nature", "backgrounds in nature")

Attributes: {sets}

Answer only with <rating>1</rating>, <rating>2</rating> or <rating>3</rating>.
"""

DESCRIPTION_JUDGE = """\
You inspect image captions and decide which semantic concepts they contain. Rate from 1 to 3 how
similar two sets of concepts are, considering whether a person would see them as related and whether
a caption containing one set would also contain the other.

- 1: no item in either set is related. Example: (["a cat", "a dog"], ["a car", "a tree"])
- 2: related, one set is a subset of the other, or some items are related.
  Example: (["a cat", "a dog"], ["an animal laying down"])
- 3: very similar. Example: (["a cat", "a dog"], ["a feline", "a puppy", "a pet"])

Concept sets: {sets}

Explain your decision briefly, then answer with <rating>1</rating>, <rating>2</rating> or <rating>3</rating>.
"""

# Rubric examples stated in the judge prompts; the simulator honours them before its token rule.
ATTRIBUTE_RUBRIC: dict[tuple[str, str], int] = {
    ("nature", "dark clouds"): 1,
    ("nature", "green color palette"): 2,
    ("nature", "waterfalls"): 2,
    ("nature", "animals"): 2,
    ("nature", "people hiking at a national park"): 2,
    ("flames", "a red color palette"): 2,
    ("nature", "beautiful landscapes"): 3,
    ("nature", "backgrounds in nature"): 3,
}

DESCRIPTION_RUBRIC: dict[tuple[frozenset[str], frozenset[str]], int] = {
    (frozenset({"a cat", "a dog"}), frozenset({"a car", "a tree"})): 1,
    (frozenset({"a cat", "a dog"}), frozenset({"an animal laying down"})): 2,
    (frozenset({"a cat", "a dog"}), frozenset({"a feline", "a puppy", "a pet"})): 3,
}

# ============== Dataset generation ==============

PROMPT_PAIRS = """\
I am building a benchmark of unexpected associations between text concepts and visual concepts
in diffusion models. For the association below, write {count} varied text-to-image prompts that
each use at least one of the text concepts (not necessarily all). Use specific instances rather
than the concept words themselves: for "farm animal", name horses or pigs.

For every prompt write an original and an altered version. The original must NOT mention the
visual attribute. The altered version describes the same scene but adds the visual attribute
(or a closely related concept) with as few edits as possible. Each prompt is at least two sentences.

Association: [({concepts}), {attribute}]

Answer in exactly this format and add nothing else:
1a. <original prompt>
1b. <altered prompt>

2a. <original prompt>
2b. <altered prompt>
"""

# ============== Baselines ==============

CAPTION = """\
Describe the image in one detailed caption covering subjects, objects, style, colors and background.
Prompt used to create it: {prompt}
"""

VISDIFF_PROPOSER = """\
Below are captions of images from two image generation models; each pair of captions comes from
the same generation prompt.

{text}

I want to find the major differences between the two groups so I can tell which model made an
image for prompts I have not seen. List distinct concepts that are more likely true for Group A
than for Group B, one per bullet "*", for example:
* "dogs with brown hair"
* "a cluttered scene"
* "low quality"

Each item must be a single concept usable as a caption for an image-text embedding model. Do not
describe the captions themselves, do not write "more of ...", "presence of ..." or "images with ...",
and do not enumerate options in parentheses. Examples of corrections:
* INCORRECT: "Presence of baby animals" CORRECTED: "baby animals"
* INCORRECT: "More realistic images" CORRECTED: "realistic images"
* INCORRECT: "Insects (cockroach, dragonfly, grasshopper)" CORRECTED: "insects"

List properties that hold more often for the images in group A than in group B:
"""

LLM_ONLY = """\
I am comparing two text-to-image models, A and B. From the prompts and the captions of the images
each model generated, find visual attributes (styles, objects, actions, concepts) present in model A
but not in model B, and the semantic concepts in the prompts that cause each difference. Skip
associations where attribute and concepts are directly related (such as 'black cats' and 'cats').

{triples}

Give the top 5 visual attributes of 1-3 words, each with the prompt concepts that cause it. Think
step by step first, then finish with a list in exactly this format:

1. Visual Attribute: 'watercolor painting'
Semantic Attributes: ['sadness', 'loneliness']

2. Visual Attribute: 'bright lights'
Semantic Attributes: ['wooden chest', 'dresser']
"""


def format_prompt_list(prompts: list[str]) -> str:
    """Render prompts one per line for the describe template."""
    return "\n".join(f"- {p}" for p in prompts) if prompts else "(none)"


def format_attribute_pair(pred: str, truth: str) -> str:
    return f'("{pred}", "{truth}")'


def format_concept_sets(pred: list[str], truth: list[str]) -> str:
    left = ", ".join(f'"{c}"' for c in pred)
    right = ", ".join(f'"{c}"' for c in truth)
    return f"([{left}], [{right}])"
