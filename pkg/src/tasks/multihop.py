"""
Multi-hop question answering one reasoning step at a time.

The backend is shown worked examples whose answers end with "So, the answer is X."
and then the question; every step it writes goes through the same detection and
mitigation as an article sentence before the next step is generated.
"""

from functools import cache
import logging
from pathlib import Path
import re
from typing import NamedTuple, Self

from pydantic import BaseModel, ConfigDict, model_validator

from common.errors import HaloError
from pipeline.model import PipelineConfig, Runtime, SentenceTrace, StopReason
from pipeline.steps import LoopOutcome, run_sentence_loop

logger = logging.getLogger(__name__)

PROMPT_ASSET = Path(__file__).with_name("assets") / "multihop_prompt.txt"
STEP_SEPARATOR = " "

ANSWER_PATTERN = re.compile(r"\bso,\s*the answer is\s+(?P<answer>.+?)\s*\.?\s*$", re.IGNORECASE)


class WorkedExample(NamedTuple):
    question: str
    answer: str


class MultiHopResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    question: str
    steps: tuple[SentenceTrace, ...] = ()
    final_answer: str | None = None
    stop_reason: StopReason = StopReason.COMPLETED
    unsegmented_text: str | None = None

    @model_validator(mode="after")
    def check_answer(self) -> Self:
        found = next(
            (a for a in (extract_final_answer(s.accepted_sentence) for s in self.steps) if a is not None),
            None,
        )
        if found != self.final_answer:
            raise ValueError("final_answer must be the answer stated by the steps")
        return self


@cache
def prompt_template() -> str:
    return PROMPT_ASSET.read_text(encoding="utf-8").rstrip("\n")


def multihop_preamble(question: str) -> str:
    return prompt_template().replace("{question}", question)


def few_shot_examples() -> list[WorkedExample]:
    """
    :return: The worked examples of the prompt, without the trailing question slot.
    """
    examples = []
    for block in prompt_template().split("\n\n"):
        match block.splitlines():
            case [question, answer] if question.startswith("Question: ") and answer.startswith("Answer: "):
                examples.append(
                    WorkedExample(question.removeprefix("Question: "), answer.removeprefix("Answer: "))
                )
            case _:
                pass
    return examples


def extract_final_answer(step_text: str) -> str | None:
    """
    Read X from a step ending with "So, the answer is X." (prefix case-insensitive).

    :param step_text: A generated step.
    :return: X without its trailing period, or None if the step states no answer.
    """
    match = ANSWER_PATTERN.search(step_text.strip())
    if match is None:
        return None
    return match.group("answer")


def states_answer(trace: SentenceTrace) -> bool:
    return extract_final_answer(trace.accepted_sentence) is not None


def result_from(question: str, outcome: LoopOutcome) -> MultiHopResult:
    answers = (extract_final_answer(step.accepted_sentence) for step in outcome.traces)
    return MultiHopResult(
        question=question,
        steps=outcome.traces,
        final_answer=next((a for a in answers if a is not None), None),
        stop_reason=outcome.stop_reason,
        unsegmented_text=outcome.unsegmented_text,
    )


def run_multihop(question: str, config: PipelineConfig, runtime: Runtime) -> MultiHopResult:
    """
    Answer a multi-hop question step by step, validating and repairing every step.

    :param question: The question.
    :param config: The pipeline configuration; ``max_steps`` bounds the number of steps.
    :param runtime: The backend and retrieval clients.
    :return: The steps and the final answer, absent if no step stated one.
    :raises HaloError: Backend and retrieval errors, with the partial MultiHopResult
        attached as ``partial_report``.
    """
    question = question.strip()
    if not question:
        raise ValueError("Question must be non-empty")

    logger.info("answering %r", question)
    try:
        outcome = run_sentence_loop(
            multihop_preamble(question),
            question,
            config,
            runtime,
            budget=config.max_steps,
            separator=STEP_SEPARATOR,
            stop_when=states_answer,
        )
    except HaloError as err:
        if isinstance(err.partial_report, LoopOutcome):
            err.partial_report = result_from(question, err.partial_report)
        raise

    result = result_from(question, outcome)
    if result.final_answer is None:
        logger.warning("no answer to %r after %d steps", question, len(result.steps))
    return result
