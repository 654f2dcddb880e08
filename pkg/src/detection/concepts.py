"""
Identification of the key concepts of a generated sentence and their alignment to tokens.
"""

from collections.abc import Callable, Sequence
import logging
import re
from typing import Self

from pydantic import BaseModel, ConfigDict, model_validator

from common import prompts
from common.errors import EmptyExtraction
from common.labels import ConceptSource
from gateway.backend import CompletionBackend
from gateway.model import GenerationParams, TokenLogprob

logger = logging.getLogger(__name__)

type Span = tuple[int, int]
type ConceptTool = Callable[[str], Sequence[str]]
"""
An external entity / keyword extractor returning phrases found in a sentence.
"""


class Concept(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    char_range: Span
    """
    half-open character interval within the sentence
    """
    token_range: Span | None = None
    """
    half-open token-index interval within the sentence's token list
    """
    source: ConceptSource

    @model_validator(mode="after")
    def check_ranges(self) -> Self:
        start, end = self.char_range
        if not self.text:
            raise ValueError("Concept text must be non-empty")
        if not (0 <= start < end and end - start == len(self.text)):
            raise ValueError(f"Character range {self.char_range} does not fit {self.text!r}")
        if self.token_range is not None and not (0 <= self.token_range[0] < self.token_range[1]):
            raise ValueError(f"Invalid token range {self.token_range}")
        return self


# phrases the rule-based extractor never treats as concepts on their own
FUNCTION_WORDS = frozenset(
    """
    a an the he she it they we i you his her its their our this that these those
    in on at of for from by with as to and but or after before during while when
    then there here however also although since
    """.split()
)

QUOTED_PATTERN = re.compile(r'"([^"]+)"|“([^”]+)”')
YEAR_PATTERN = re.compile(r"\b(?:1\d{3}|20\d{2})\b")
QUANTITY_PATTERN = re.compile(
    r"\b\d+(?:,\d{3})*(?:\.\d+)?(?:\s?%|\s(?:percent|thousand|million|billion|trillion))?"
)
CAPITALIZED_PATTERN = re.compile(r"\b[A-Z][\w'’-]*(?:\s+[A-Z][\w'’-]*)*")


def extract_concepts(
    sentence: str,
    topic: str,
    method: ConceptSource,
    *,
    backend: CompletionBackend | None = None,
    params: GenerationParams | None = None,
    preamble: str | None = None,
    accepted: Sequence[str] = (),
    tool: ConceptTool | None = None,
) -> list[Concept]:
    """
    Identify the concepts of a sentence.

    :param sentence: The generated sentence.
    :param topic: The topic of the generation.
    :param method: The identification technique.
    :param backend: The backend instructed when ``method`` is model_instruction.
    :param params: Decoding configuration of the instruction call.
    :param preamble: The generation prompt the sentence continues; the topic prompt by default.
    :param accepted: The sentences accepted before this one.
    :param tool: The extractor used when ``method`` is external_tool.
    :return: Deduplicated concepts in order of first occurrence.
    :raises EmptyExtraction: If no concept was found.
    """
    if not sentence.strip():
        raise ValueError("Sentence must be non-empty")

    match method:
        case ConceptSource.MODEL_INSTRUCTION:
            if backend is None:
                raise ValueError("model_instruction extraction requires a backend")
            prompt = prompts.keyphrase_prompt(
                preamble if preamble is not None else prompts.article_preamble(topic),
                accepted,
                sentence,
            )
            reply = backend.complete(prompt, params or GenerationParams(logprobs_requested=False)).text
            concepts = span_phrases(sentence, parse_keyphrases(reply), method)
        case ConceptSource.RULE_BASED:
            concepts = rule_based_concepts(sentence)
        case ConceptSource.EXTERNAL_TOOL:
            if tool is None:
                raise ValueError("external_tool extraction requires a concept tool")
            concepts = span_phrases(sentence, tool(sentence), method)
        case _:
            raise ValueError(f"Unknown concept method: {method}")

    if not concepts:
        raise EmptyExtraction(f"No concepts found in: {sentence!r}")
    return concepts


def parse_keyphrases(reply: str) -> list[str]:
    """
    Parse a comma separated keyphrase list.

    Items are trimmed of whitespace, list markers, quotes and trailing periods;
    duplicates (case-insensitive) keep their first position.

    :param reply: The raw reply of the backend.
    :return: The normalized phrases.
    """
    phrases: list[str] = []
    seen: set[str] = set()
    for item in re.split(r"[,\n]", reply):
        phrase = re.sub(r"^\s*(?:[-*•]|\d+[.)])\s+", "", item)
        phrase = phrase.strip().strip("\"'“”").rstrip(".").strip()
        if not phrase or phrase.casefold() in seen:
            continue
        seen.add(phrase.casefold())
        phrases.append(phrase)
    return phrases


def find_span(sentence: str, phrase: str) -> Span | None:
    """
    Locate the first case-insensitive occurrence of a phrase, preferring whole-word matches.
    """
    escaped = re.escape(phrase)
    for pattern in (rf"(?<!\w){escaped}(?!\w)", escaped):
        match = re.search(pattern, sentence, re.IGNORECASE)
        if match is not None:
            return match.span()
    return None


def span_phrases(sentence: str, phrases: Sequence[str], source: ConceptSource) -> list[Concept]:
    """
    Turn phrases into concepts spanning their first occurrence in the sentence.

    Phrases that do not occur in the sentence (paraphrases) are dropped.
    """
    spans: dict[str, Span] = {}
    for phrase in phrases:
        span = find_span(sentence, phrase.strip())
        if span is None:
            logger.debug("dropping keyphrase %r: not found in sentence", phrase)
            continue
        surface = sentence[span[0] : span[1]]
        spans.setdefault(surface.casefold(), span)
    return build_concepts(sentence, spans.values(), source)


def rule_based_concepts(sentence: str) -> list[Concept]:
    """
    Deterministic concept heuristics: quoted titles, four-digit years,
    numeric quantities and capitalized spans, in that priority on overlap.
    """
    chosen: list[Span] = []

    def take(span: Span) -> None:
        if span[0] < span[1] and not any(span[0] < end and start < span[1] for start, end in chosen):
            chosen.append(span)

    for match in QUOTED_PATTERN.finditer(sentence):
        group = 1 if match.group(1) is not None else 2
        take(match.span(group))
    for match in YEAR_PATTERN.finditer(sentence):
        take(match.span())
    for match in QUANTITY_PATTERN.finditer(sentence):
        take(match.span())
    for match in CAPITALIZED_PATTERN.finditer(sentence):
        span = strip_function_words(sentence, match.span())
        if span is not None:
            take(span)

    # first occurrence of each surface form only
    unique: dict[str, Span] = {}
    for span in sorted(chosen):
        unique.setdefault(sentence[span[0] : span[1]].casefold(), span)
    return build_concepts(sentence, unique.values(), ConceptSource.RULE_BASED)


def strip_function_words(sentence: str, span: Span) -> Span | None:
    """Drop leading capitalized function words ("He", "The") from a capitalized span."""
    start, end = span
    for word in re.finditer(r"\S+", sentence[start:end]):
        if word.group().casefold() not in FUNCTION_WORDS:
            return start + word.start(), end
    return None


def build_concepts(sentence: str, spans, source: ConceptSource) -> list[Concept]:
    return [
        Concept(text=sentence[start:end], char_range=(start, end), source=source)
        for start, end in sorted(spans)
    ]


def align_concept_tokens(
    concept: Concept, tokens: Sequence[TokenLogprob], sentence_token_offset: int = 0
) -> Concept:
    """
    Attach the minimal contiguous token interval covering a concept.

    :param concept: The concept, with its character range in the sentence.
    :param tokens: The sentence's tokens, in order.
    :param sentence_token_offset: The character offset of the sentence's first
        character within the joined token texts (leading whitespace of the first token).
    :return: The concept with ``token_range`` set, or absent when no interval covers it.
    """
    start = concept.char_range[0] + sentence_token_offset
    end = concept.char_range[1] + sentence_token_offset
    joined = "".join(token.token_text for token in tokens)
    if joined[start:end] != concept.text:
        return concept.model_copy(update={"token_range": None})

    first = last = None
    position = 0
    for index, token in enumerate(tokens):
        token_end = position + len(token.token_text)
        if first is None and token_end > start:
            first = index
        if position < end:
            last = index
        position = token_end

    if first is None or last is None:
        return concept.model_copy(update={"token_range": None})
    return concept.model_copy(update={"token_range": (first, last + 1)})
