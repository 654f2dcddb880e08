"""
Probability scores of concepts and sentences, and the selection of uncertain concepts.

A score aggregates the probabilities p_1..p_n of the tokens covering a concept:

- minimum: MIN(p_1..p_n)
- average: AVG(p_1..p_n)
- normalized product: (p_1 * ... * p_n) ** (1 / n), computed in log space
"""

from collections.abc import Callable, Sequence
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.errors import EmptyTokenList
from common.labels import ScoreMethod
from detection.concepts import Concept
from gateway.model import TokenLogprob

type Aggregate = Callable[[np.ndarray], float]


def minimum(probs: np.ndarray) -> float:
    return float(probs.min())


def average(probs: np.ndarray) -> float:
    return float(probs.mean())


def normalized_product(probs: np.ndarray) -> float:
    if (probs == 0.0).any():
        return 0.0
    value = float(np.exp(np.log(probs).mean()))
    # keep the MIN <= GM <= AVG chain exact under rounding
    return float(np.clip(value, probs.min(), probs.mean()))


score_lut: dict[ScoreMethod, Aggregate] = {
    ScoreMethod.MINIMUM: minimum,
    ScoreMethod.AVERAGE: average,
    ScoreMethod.NORMALIZED_PRODUCT: normalized_product,
}


class DetectionPolicy(BaseModel):
    """Which concepts are validated and how verdicts are counted."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    """
    concepts scoring below the threshold are validated; 1.0 validates every scored concept
    """
    validate_unscored: bool = True
    """
    validate concepts without token probabilities (appended after the scored ones)
    """
    method: ScoreMethod = ScoreMethod.MINIMUM
    strict: bool = True
    """
    count unparseable verdicts and empty retrievals as failed validations
    """


class ConceptScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    concept: Concept
    score: float | None = Field(default=None, ge=0.0, le=1.0)
    method: ScoreMethod = ScoreMethod.MINIMUM
    probabilities: tuple[float, ...] = ()
    """
    probabilities of the covering tokens
    """

    @model_validator(mode="after")
    def check_presence(self) -> Self:
        if (self.score is None) != (self.concept.token_range is None):
            raise ValueError("A concept is scored iff it is aligned to tokens")
        return self


def score_concept(probs: Sequence[float], method: ScoreMethod) -> float:
    """
    Aggregate token probabilities into a concept score.

    :param probs: The probabilities of the concept's tokens, each in [0, 1].
    :param method: The aggregation technique.
    :return: The score, in [0, 1].
    :raises EmptyTokenList: If ``probs`` is empty.
    """
    values = np.asarray(probs, dtype=np.float64)
    if values.size == 0:
        raise EmptyTokenList("Cannot score a concept without tokens")
    if ((values < 0.0) | (values > 1.0)).any():
        raise ValueError(f"Probabilities must lie in [0, 1]: {probs}")
    return score_lut[method](values)


def score_concepts(
    concepts: Sequence[Concept], tokens: Sequence[TokenLogprob], method: ScoreMethod
) -> list[ConceptScore]:
    """
    Score aligned concepts over the sentence's tokens; unaligned concepts stay unscored.
    """
    scores = []
    for concept in concepts:
        if concept.token_range is None:
            scores.append(ConceptScore(concept=concept, method=method))
            continue
        start, end = concept.token_range
        probs = tuple(token.probability for token in tokens[start:end])
        scores.append(
            ConceptScore(
                concept=concept,
                score=score_concept(probs, method),
                method=method,
                probabilities=probs,
            )
        )
    return scores


def score_sentence(concept_scores: Sequence[ConceptScore]) -> float | None:
    """
    The minimum token probability across all scored concepts of a sentence.

    A scored concept without recorded token probabilities contributes its score.

    :return: The sentence score, or None if no concept is scored.
    """
    probs = [
        p
        for score in concept_scores
        if score.score is not None
        for p in (score.probabilities or (score.score,))
    ]
    if not probs:
        return None
    return float(np.min(probs))


def select_uncertain(
    scores: Sequence[ConceptScore], policy: DetectionPolicy
) -> list[ConceptScore]:
    """
    Pick the concepts to validate, in validation order.

    :param scores: The concept scores of a sentence.
    :param policy: The detection policy.
    :return: Scored concepts below the threshold in ascending score order (stable on ties),
        followed by the unscored ones when ``policy.validate_unscored``.
    """
    validate_all = policy.threshold >= 1.0
    scored = [
        s for s in scores if s.score is not None and (validate_all or s.score < policy.threshold)
    ]
    scored.sort(key=lambda s: s.score)
    if policy.validate_unscored:
        scored.extend(s for s in scores if s.score is None)
    return scored
