from collections.abc import Sequence
import logging
import re
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from common import prompts
from common.errors import EmptyRepair
from gateway.backend import CompletionBackend
from gateway.model import GenerationParams
from retrieval.model import Evidence

logger = logging.getLogger(__name__)

REPAIR_PARAMS = GenerationParams(max_tokens=128, logprobs_requested=False)


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


class RepairResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    original: str
    repaired: str = Field(min_length=1)
    evidence_used: tuple[Evidence, ...]
    changed: bool
    fallback: bool = False
    """
    the backend returned nothing usable and the original sentence was kept
    """

    @model_validator(mode="after")
    def check_changed(self) -> Self:
        if self.changed != (normalize_whitespace(self.original) != normalize_whitespace(self.repaired)):
            raise ValueError("changed must tell whether the repaired sentence differs from the original")
        return self

    @staticmethod
    def create(
        original: str, repaired: str, evidence: Sequence[Evidence], fallback: bool = False
    ) -> "RepairResult":
        return RepairResult(
            original=original,
            repaired=repaired,
            evidence_used=tuple(evidence),
            changed=normalize_whitespace(original) != normalize_whitespace(repaired),
            fallback=fallback,
        )

    @staticmethod
    def keep_original(original: str, evidence: Sequence[Evidence]) -> "RepairResult":
        return RepairResult.create(original, original, evidence, fallback=True)


def first_paragraph(reply: str) -> str:
    paragraphs = re.split(r"\n\s*\n", reply.strip(), maxsplit=1)
    return normalize_whitespace(paragraphs[0]) if paragraphs else ""


def repair_sentence(
    sentence: str,
    topic: str,
    evidence: Sequence[Evidence],
    *,
    backend: CompletionBackend,
    params: GenerationParams = REPAIR_PARAMS,
) -> RepairResult:
    """
    Ask the backend to rewrite a flagged sentence so that it agrees with the evidence.

    :param sentence: The sentence flagged as hallucinated.
    :param topic: The topic of the generation.
    :param evidence: The evidence retrieved for the failing concept.
    :param backend: The backend.
    :param params: Decoding configuration.
    :return: The repair; the repaired sentence is the first paragraph of the reply.
    :raises EmptyRepair: If the reply is blank.
    """
    if not evidence:
        raise ValueError("Repair requires the evidence of the failing concept")

    prompt = prompts.repair_prompt((e.text for e in evidence), sentence)
    repaired = first_paragraph(backend.complete(prompt, params).text)
    if not repaired:
        raise EmptyRepair(f"Blank repair of: {sentence!r}")

    if topic.casefold() in sentence.casefold() and topic.casefold() not in repaired.casefold():
        logger.warning("repair no longer mentions %r: %r", topic, repaired)
    return RepairResult.create(sentence, repaired, evidence)
