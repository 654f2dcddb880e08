import enum
from typing import NamedTuple, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.labels import ConceptSource, QuestionType
from detection.concepts import ConceptTool
from detection.scoring import ConceptScore, DetectionPolicy
from detection.validator import ValidationOutcome
from gateway.backend import BackendCall, CompletionBackend
from gateway.model import GenerationParams, TokenLogprob
from mitigation.repair import RepairResult
from retrieval.model import RetrievalConfig
from retrieval.retrieve import KnowledgeSources


class StopReason(enum.StrEnum):
    COMPLETED = "completed"
    """The sentence budget was used up, or a multi-hop answer was found"""

    BACKEND_STOPPED = "backend_stopped"
    """The backend returned an empty continuation"""

    SEGMENTATION_FAILURE = "segmentation_failure"
    """The continuation had no sentence boundary"""

    BUDGET_EXHAUSTED = "budget_exhausted"
    """The multi-hop step budget ran out before an answer was found"""

    ERROR = "error"
    """A backend or retrieval error aborted the run; only set on partial reports"""


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_sentences: int = Field(default=5, ge=1)
    params: GenerationParams = GenerationParams()
    """
    decoding configuration of the sentence generation calls
    """
    policy: DetectionPolicy = DetectionPolicy()
    retrieval: RetrievalConfig = RetrievalConfig()
    concept_method: ConceptSource = ConceptSource.MODEL_INSTRUCTION
    mitigation_enabled: bool = True
    revalidate: bool = False
    """
    validate every concept of a changed repair once more; the result is recorded, never repaired again
    """
    question_type: QuestionType = QuestionType.YES_NO
    max_steps: int = Field(default=6, ge=1)
    """
    step budget of multi-hop answering
    """

    @property
    def auxiliary_params(self) -> GenerationParams:
        """Decoding configuration of the instruction calls (keyphrases, questions, answers, repairs)."""
        return GenerationParams(max_tokens=128, temperature=self.params.temperature, logprobs_requested=False)


class Runtime(NamedTuple):
    """The collaborators a run talks to. Immutable and shareable between concurrent runs."""

    backend: CompletionBackend
    sources: KnowledgeSources = KnowledgeSources()
    concept_tool: ConceptTool | None = None


class SentenceTrace(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    raw_sentence: str
    tokens: tuple[TokenLogprob, ...] = ()
    """
    the tokens overlapping the sentence in the generated continuation
    """
    concepts: tuple[ConceptScore, ...] = ()
    sentence_score: float | None = None
    validation: ValidationOutcome
    repair: RepairResult | None = None
    revalidation: ValidationOutcome | None = None
    accepted_sentence: str
    calls: tuple[BackendCall, ...] = ()
    """
    every backend call made for this sentence, generation included
    """

    @model_validator(mode="after")
    def check_acceptance(self) -> Self:
        if self.repair is not None and not self.validation.hallucination_detected:
            raise ValueError("Only sentences flagged as hallucinated are repaired")
        if self.revalidation is not None and self.repair is None:
            raise ValueError("Only repaired sentences are revalidated")
        expected = self.repair.repaired if self.repair is not None else self.raw_sentence
        if self.accepted_sentence != expected:
            raise ValueError("The accepted sentence is the repair when present, else the raw sentence")
        return self

    @property
    def hallucination_detected(self) -> bool:
        return self.validation.hallucination_detected


def joined_text(traces: tuple[SentenceTrace, ...]) -> str:
    return " ".join(trace.accepted_sentence for trace in traces)


class GenerationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    topic: str
    traces: tuple[SentenceTrace, ...] = ()
    final_text: str = ""
    stop_reason: StopReason = StopReason.COMPLETED
    unsegmented_text: str | None = None
    """
    the continuation without a sentence boundary that stopped the run
    """
    stopped_calls: tuple[BackendCall, ...] = ()
    """
    backend calls made for the sentence that was not accepted
    """

    @model_validator(mode="after")
    def check_text(self) -> Self:
        if self.final_text != joined_text(self.traces):
            raise ValueError("final_text must be the accepted sentences joined with single spaces")
        if [trace.index for trace in self.traces] != list(range(len(self.traces))):
            raise ValueError("Trace indices must be 0, 1, 2, ...")
        return self
