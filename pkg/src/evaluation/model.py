import enum
from typing import Literal, NamedTuple, Self

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from common.labels import Label

ANNOTATION_SCHEMA = "halo-annotations/1"

type Probability = float


class BinLevel(enum.StrEnum):
    CONCEPT = "concept"
    SENTENCE = "sentence"


class SentenceScope(enum.StrEnum):
    """Which tokens a sentence score is computed over."""

    CONCEPT_TOKENS = "concept_tokens"
    """The minimum over the scores of the annotated concepts"""

    ALL_TOKENS = "all_tokens"
    """The minimum over every token of the sentence"""


def check_probabilities(probs: tuple[float, ...] | None) -> None:
    if probs is None:
        return
    if not probs:
        raise ValueError("Token probabilities must be non-empty when given")
    if any(not (0.0 <= p <= 1.0) for p in probs):
        raise ValueError(f"Token probabilities must lie in [0, 1]: {probs}")


class ConceptLabel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    concept_text: str = Field(min_length=1)
    label: Label
    token_probs: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def check_probs(self) -> Self:
        check_probabilities(self.token_probs)
        return self


class AnnotationRecord(BaseModel):
    """One human-labeled generated sentence. One JSONL line of an annotation file."""

    model_config = ConfigDict(
        frozen=True, extra="forbid", validate_by_name=True, validate_by_alias=True, serialize_by_alias=True
    )

    schema_version: Literal["halo-annotations/1"] = Field(default=ANNOTATION_SCHEMA, alias="schema")
    topic: str
    sentence_index: int = Field(ge=0)
    sentence: str
    sentence_label: Label
    concept_labels: tuple[ConceptLabel, ...] = ()
    token_probs: tuple[float, ...] | None = None
    """
    probabilities of every token of the sentence
    """

    @model_validator(mode="after")
    def check_probs(self) -> Self:
        check_probabilities(self.token_probs)
        return self

    @property
    def key(self) -> tuple[str, int]:
        return self.topic, self.sentence_index


class PredictionRecord(BaseModel):
    """The detector's output for one sentence. One JSONL line of a predictions file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    topic: str
    sentence_index: int = Field(ge=0)
    hallucination_detected: bool
    score: float | None = Field(default=None, ge=0.0, le=1.0)
    label_after_repair: Label | None = None
    """
    gold label of the repaired sentence, for sentences that were repaired and annotated again
    """

    @property
    def key(self) -> tuple[str, int]:
        return self.topic, self.sentence_index


class DetectionMetrics(BaseModel):
    """
    Confusion-matrix metrics with "hallucinated" as the positive class.
    A precision or recall whose denominator is zero is absent.
    """

    model_config = ConfigDict(frozen=True)

    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    tn: int = Field(ge=0)
    fn: int = Field(ge=0)
    accuracy: float = Field(ge=0.0, le=1.0)
    precision_hallucinated: float | None = Field(ge=0.0, le=1.0)
    recall_hallucinated: float | None = Field(ge=0.0, le=1.0)
    precision_not: float | None = Field(ge=0.0, le=1.0)
    recall_not: float | None = Field(ge=0.0, le=1.0)


class CurvePoint(NamedTuple):
    threshold: float
    precision: float
    recall: float


class ContingencyCounts(BaseModel):
    """
    How a sentence's label relates to the labels of the sentences before it.

    A: an earlier sentence is hallucinated and this one is too;
    B: an earlier sentence is hallucinated and this one is not;
    C: no earlier sentence is hallucinated and this one is;
    D: neither.
    """

    model_config = ConfigDict(frozen=True)

    A: int = Field(default=0, ge=0)
    B: int = Field(default=0, ge=0)
    C: int = Field(default=0, ge=0)
    D: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.A + self.B + self.C + self.D

    def __add__(self, other: "ContingencyCounts") -> "ContingencyCounts":
        return ContingencyCounts(
            A=self.A + other.A, B=self.B + other.B, C=self.C + other.C, D=self.D + other.D
        )


class ContingencyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_index: dict[int, ContingencyCounts]
    total: ContingencyCounts


class MitigationOutcome(BaseModel):
    """
    Before/after labels of the sentences the detector flagged.

    tp_* are correct detections (hallucinated before), fp_* false alarms.
    A rate whose denominator is zero is absent.
    """

    model_config = ConfigDict(frozen=True)

    tp_fixed: int = Field(ge=0)
    tp_unfixed: int = Field(ge=0)
    fp_preserved: int = Field(ge=0)
    fp_broken: int = Field(ge=0)
    success_rate: float | None = Field(ge=0.0, le=1.0)
    deterioration_rate: float | None = Field(ge=0.0, le=1.0)


class ProbabilityBin(BaseModel):
    model_config = ConfigDict(frozen=True)

    low: float
    high: float
    count: int = Field(ge=0)
    hallucinated: int = Field(ge=0)

    @computed_field
    @property
    def fraction(self) -> float | None:
        """The fraction of hallucinated items in the bin, absent when it is empty."""
        return self.hallucinated / self.count if self.count else None
