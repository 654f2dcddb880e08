"""
Offline scoring of token log-probability dumps, without a backend.

Dump format (JSON Lines)::

    {"id": "s1", "text": "Rick Mahler was born in 1953.", "tokens": [["Rick", -0.01], [" Mahler", -0.2], ...]}

The token texts must concatenate to ``text``. Concepts are found with the
rule-based extractor and scored with every aggregation method.
"""

from pydantic import BaseModel, ConfigDict

from common.errors import EmptyExtraction
from common.labels import ConceptSource, ScoreMethod
from detection.concepts import Span, align_concept_tokens, extract_concepts
from detection.scoring import score_concept
from gateway.model import Completion, TokenLogprob


class DumpRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    text: str
    tokens: tuple[tuple[str, float], ...]

    def completion(self) -> Completion:
        return Completion(
            text=self.text,
            tokens=tuple(TokenLogprob.from_logprob(token, logprob) for token, logprob in self.tokens),
        )


class ScoredConcept(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    char_range: Span
    token_range: Span | None
    scores: dict[ScoreMethod, float] = {}
    """
    empty when the concept could not be aligned to tokens
    """


class ScoredText(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    concepts: tuple[ScoredConcept, ...] = ()
    sentence_scores: dict[ScoreMethod, float] = {}
    """
    the lowest concept score per method
    """


def score_record(record: DumpRecord) -> ScoredText:
    """
    Find and score the concepts of one dumped completion.

    :param record: The dump record.
    :return: The concept and sentence scores; no concepts when none were found.
    """
    completion = record.completion()
    try:
        concepts = extract_concepts(record.text, "", ConceptSource.RULE_BASED)
    except EmptyExtraction:
        return ScoredText(id=record.id)

    scored = []
    for concept in concepts:
        aligned = align_concept_tokens(concept, completion.tokens)
        scores = {}
        if aligned.token_range is not None:
            start, end = aligned.token_range
            probs = [token.probability for token in completion.tokens[start:end]]
            scores = {method: score_concept(probs, method) for method in ScoreMethod}
        scored.append(
            ScoredConcept(
                text=aligned.text,
                char_range=aligned.char_range,
                token_range=aligned.token_range,
                scores=scores,
            )
        )

    sentence_scores = {
        method: min(c.scores[method] for c in scored if c.scores)
        for method in ScoreMethod
        if any(c.scores for c in scored)
    }
    return ScoredText(id=record.id, concepts=tuple(scored), sentence_scores=sentence_scores)
