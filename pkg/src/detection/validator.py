"""
Validation of uncertain concepts: question creation, evidence retrieval and answer checking.

Concepts are validated one at a time in the given order; the first failed
validation stops the procedure (greedy exit) and flags the sentence.
"""

from collections.abc import Sequence
import enum
import logging
import re
from typing import Self

from pydantic import BaseModel, ConfigDict, model_validator

from common import prompts
from common.errors import EmptyQuestion
from common.labels import QuestionType
from detection.concepts import Concept
from detection.scoring import ConceptScore, DetectionPolicy
from gateway.backend import CompletionBackend
from gateway.model import GenerationParams
from retrieval.model import Evidence, RetrievalConfig
from retrieval.retrieve import KnowledgeSources, retrieve

logger = logging.getLogger(__name__)

VALIDATION_PARAMS = GenerationParams(max_tokens=64, logprobs_requested=False)


class Answer(enum.StrEnum):
    YES = "yes"
    NO = "no"
    UNPARSEABLE = "unparseable"
    """The reply starts with neither "yes" nor "no" """


class ValidationQuestion(BaseModel):
    model_config = ConfigDict(frozen=True)

    concept: Concept
    question: str
    qtype: QuestionType = QuestionType.YES_NO


class Verdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    answer: Answer
    raw_reply: str


class ConceptValidation(BaseModel):
    """One validated concept: its question, the evidence shown, and the verdict."""

    model_config = ConfigDict(frozen=True)

    question: ValidationQuestion
    evidence: tuple[Evidence, ...] = ()
    verdict: Verdict | None = None
    """
    absent for generate-only Wh questions
    """


class ValidationOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_concept: tuple[ConceptValidation, ...] = ()
    hallucination_detected: bool = False
    failing_concept: Concept | None = None

    @model_validator(mode="after")
    def check_failure(self) -> Self:
        if self.hallucination_detected != (self.failing_concept is not None):
            raise ValueError("A failing concept is present iff a hallucination is detected")
        return self

    @property
    def failing_evidence(self) -> tuple[Evidence, ...]:
        """The evidence shown when validating the failing concept."""
        if not self.hallucination_detected:
            return ()
        return self.per_concept[-1].evidence


def parse_verdict(reply: str) -> Answer:
    """
    Read a Yes/No verdict from the leading word of a reply, case-insensitively.
    """
    match = re.match(r"[\W_]*([a-z]+)", reply.casefold())
    match match.group(1) if match else None:
        case "yes":
            return Answer.YES
        case "no":
            return Answer.NO
        case _:
            return Answer.UNPARSEABLE


def first_line(reply: str) -> str:
    for line in reply.strip().splitlines():
        if line.strip():
            return line.strip()
    return ""


def make_validation_question(
    sentence: str,
    topic: str,
    concept: Concept,
    qtype: QuestionType,
    *,
    backend: CompletionBackend,
    params: GenerationParams = VALIDATION_PARAMS,
) -> ValidationQuestion:
    """
    Instruct the backend to write a question testing the information about a concept.

    :param sentence: The sentence containing the concept.
    :param topic: The topic of the generation.
    :param concept: The concept under test.
    :param qtype: Yes/No or Wh.
    :param backend: The backend.
    :param params: Decoding configuration.
    :return: The question (first non-empty line of the reply).
    :raises EmptyQuestion: If the reply is blank.
    """
    if concept.text not in sentence:
        raise ValueError(f"Concept {concept.text!r} does not occur in the sentence")

    prompt = prompts.question_prompt(sentence, topic, concept.text, wh=qtype is QuestionType.WH)
    question = first_line(backend.complete(prompt, params).text)
    if not question:
        raise EmptyQuestion(f"Blank validation question for concept {concept.text!r}")
    return ValidationQuestion(concept=concept, question=question, qtype=qtype)


def answer_validation(
    q: ValidationQuestion,
    evidence: Sequence[Evidence],
    topic: str,
    *,
    backend: CompletionBackend,
    params: GenerationParams = VALIDATION_PARAMS,
) -> Verdict:
    """
    Answer a Yes/No validation question using the evidence as context.

    :param q: The question.
    :param evidence: The evidence shown to the backend, in order.
    :param topic: The topic of the generation.
    :param backend: The backend.
    :param params: Decoding configuration.
    :return: The verdict.
    """
    if q.qtype is not QuestionType.YES_NO:
        raise ValueError("Only Yes/No questions are answered")

    prompt = prompts.answer_prompt((e.text for e in evidence), topic, q.question)
    reply = backend.complete(prompt, params).text
    return Verdict(answer=parse_verdict(reply), raw_reply=reply)


def validate_sentence(
    sentence: str,
    topic: str,
    ordered_concepts: Sequence[ConceptScore],
    retrieval: RetrievalConfig,
    policy: DetectionPolicy,
    *,
    backend: CompletionBackend,
    sources: KnowledgeSources,
    qtype: QuestionType = QuestionType.YES_NO,
    params: GenerationParams = VALIDATION_PARAMS,
) -> ValidationOutcome:
    """
    Validate concepts sequentially and stop at the first failure.

    A validation fails on a "no" verdict; under a strict policy also on an
    unparseable verdict or when no evidence was found. Wh questions are only
    generated and retrieved for, never answered.

    A concept whose question comes back blank is skipped with a warning and is
    not recorded, so ``per_concept`` holds one entry per validated concept and
    its length is the position of the first failure among those plus one.

    :param sentence: The sentence under test.
    :param topic: The topic of the generation.
    :param ordered_concepts: The concepts in validation order (see select_uncertain).
    :param retrieval: The retrieval configuration.
    :param policy: The detection policy.
    :param backend: The backend creating and answering questions.
    :param sources: The retrieval clients.
    :param qtype: The question type to create.
    :param params: Decoding configuration of the question and answer calls.
    :return: The outcome.
    """
    validations: list[ConceptValidation] = []
    for scored in ordered_concepts:
        concept = scored.concept
        try:
            question = make_validation_question(
                sentence, topic, concept, qtype, backend=backend, params=params
            )
        except EmptyQuestion as err:
            logger.warning("skipping concept: %s", err)
            continue

        evidence = retrieve(question.question, retrieval, sources, backend)

        if qtype is QuestionType.WH:
            validations.append(ConceptValidation(question=question, evidence=tuple(evidence)))
            continue

        if not evidence and policy.strict:
            # nothing to verify against: extrinsic
            verdict = Verdict(answer=Answer.UNPARSEABLE, raw_reply="")
        else:
            verdict = answer_validation(question, evidence, topic, backend=backend, params=params)

        validations.append(
            ConceptValidation(question=question, evidence=tuple(evidence), verdict=verdict)
        )
        failed = verdict.answer is Answer.NO or (
            verdict.answer is Answer.UNPARSEABLE and policy.strict
        )
        logger.debug(
            "concept %r score=%s verdict=%s", concept.text, scored.score, verdict.answer
        )
        if failed:
            return ValidationOutcome(
                per_concept=tuple(validations),
                hallucination_detected=True,
                failing_concept=concept,
            )

    return ValidationOutcome(per_concept=tuple(validations))
