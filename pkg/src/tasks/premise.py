"""
Detection and rectification of questions built on a false premise.

Step I asks the backend, given evidence retrieved for the question, whether the
question makes factually correct assumptions. Only an explicit "No" leads to
Step II, which rewrites the question using Step I's reply as context.
"""

import logging
from typing import Self

from pydantic import BaseModel, ConfigDict, model_validator

from common import prompts
from common.errors import EmptyRectification
from detection.validator import Answer, first_line, parse_verdict
from gateway.backend import CompletionBackend
from gateway.model import GenerationParams
from pipeline.model import PipelineConfig, Runtime
from retrieval.model import Evidence, RetrievalConfig
from retrieval.retrieve import retrieve

logger = logging.getLogger(__name__)

PREMISE_PARAMS = GenerationParams(max_tokens=128, logprobs_requested=False)


class PremiseReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    question: str
    evidence: tuple[Evidence, ...] = ()
    premise_ok: bool
    premise_reply: str = ""
    """
    the raw Step I reply
    """
    rectified_question: str | None = None
    changed: bool = False
    """
    the rectified question differs from the original
    """
    rectification_failed: bool = False
    """
    Step II returned nothing; the original question was kept
    """

    @model_validator(mode="after")
    def check_rectification(self) -> Self:
        if self.premise_ok != (self.rectified_question is None):
            raise ValueError("A rectified question is present iff the premise is false")
        if self.rectified_question is not None and not self.rectified_question.strip():
            raise ValueError("The rectified question must be non-empty")
        if self.changed != (self.rectified_question not in (None, self.question)):
            raise ValueError("changed must tell whether the rectified question differs")
        return self

    @property
    def asked_question(self) -> str:
        """The question that gets answered."""
        return self.question if self.rectified_question is None else self.rectified_question


def check_premise(
    question: str,
    retrieval: RetrievalConfig,
    runtime: Runtime,
    params: GenerationParams = PREMISE_PARAMS,
) -> PremiseReport:
    """
    Step I: ask whether the question's assumptions agree with retrieved evidence.

    :param question: The user question, also the retrieval query.
    :param retrieval: The retrieval configuration.
    :param runtime: The backend and retrieval clients.
    :param params: Decoding configuration.
    :return: The report with ``premise_ok`` set; only a leading "no" makes it false.
    """
    if not question.strip():
        raise ValueError("Question must be non-empty")

    evidence = retrieve(question, retrieval, runtime.sources, runtime.backend)
    prompt = prompts.premise_check_prompt((e.text for e in evidence), question)
    reply = runtime.backend.complete(prompt, params).text
    verdict = parse_verdict(reply)
    if verdict is Answer.UNPARSEABLE:
        logger.warning("unparseable premise verdict %r; treating the premise as correct", reply)

    premise_ok = verdict is not Answer.NO
    return PremiseReport(
        question=question,
        evidence=tuple(evidence),
        premise_ok=premise_ok,
        premise_reply=reply,
        rectified_question=None if premise_ok else question,
    )


def rectify_question(
    question: str,
    premise_reply: str,
    *,
    backend: CompletionBackend,
    params: GenerationParams = PREMISE_PARAMS,
) -> str:
    """
    Step II: rewrite the question using the Step I reply as context.

    :param question: The question with a false premise.
    :param premise_reply: The raw Step I reply.
    :param backend: The backend.
    :param params: Decoding configuration.
    :return: The rectified question (first non-empty line of the reply).
    :raises EmptyRectification: If the reply is blank.
    """
    reply = backend.complete(prompts.rectify_prompt(premise_reply, question), params).text
    rectified = first_line(reply)
    if not rectified:
        raise EmptyRectification(f"Blank rectification of {question!r}")
    return rectified


def run_false_premise(
    question: str, config: PipelineConfig, runtime: Runtime
) -> tuple[PremiseReport, str]:
    """
    Check the premise of a question, rectify it if false, and answer with the evidence as context.

    :param question: The user question.
    :param config: The pipeline configuration.
    :param runtime: The backend and retrieval clients.
    :return: The premise report and the answer to ``report.asked_question``.
    """
    question = question.strip()
    params = config.auxiliary_params
    report = check_premise(question, config.retrieval, runtime, params)

    if not report.premise_ok:
        try:
            rectified = rectify_question(
                question, report.premise_reply, backend=runtime.backend, params=params
            )
            report = report.model_copy(
                update={"rectified_question": rectified, "changed": rectified != question}
            )
        except EmptyRectification as err:
            logger.warning("%s; keeping the original question", err)
            report = report.model_copy(update={"rectification_failed": True})

    answer_params = config.params.model_copy(update={"logprobs_requested": False})
    prompt = prompts.context_answer_prompt((e.text for e in report.evidence), report.asked_question)
    answer = runtime.backend.complete(prompt, answer_params).text.strip()
    logger.info("premise_ok=%s asked=%r", report.premise_ok, report.asked_question)
    return report, answer


class FalsePremiseRun(BaseModel):
    """The written output of one false-premise question."""

    model_config = ConfigDict(frozen=True)

    report: PremiseReport
    answer: str
