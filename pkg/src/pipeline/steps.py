"""
The steps shared by every generation mode: generate one sentence, detect, mitigate.
"""

from collections.abc import Callable, Sequence
import logging
from typing import NamedTuple

from common import prompts
from common.errors import EmptyExtraction, EmptyRepair, HaloError
from detection.concepts import align_concept_tokens, extract_concepts
from detection.scoring import ConceptScore, score_concepts, score_sentence, select_uncertain
from detection.validator import ValidationOutcome, validate_sentence
from gateway.backend import BackendCall, RecordingBackend
from gateway.model import Completion, TokenLogprob
from mitigation.repair import RepairResult, repair_sentence
from pipeline.model import PipelineConfig, Runtime, SentenceTrace, StopReason
from pipeline.segment import segment_first_sentence

logger = logging.getLogger(__name__)

type StopCondition = Callable[[SentenceTrace], bool]


class SentenceSlice(NamedTuple):
    """The tokens of a completion overlapping its first sentence."""

    tokens: tuple[TokenLogprob, ...]
    offset: int
    """
    character offset of the sentence's first character within the joined token texts
    """


def slice_sentence_tokens(completion: Completion, sentence: str) -> SentenceSlice:
    start = len(completion.text) - len(completion.text.lstrip())
    end = start + len(sentence)
    picked = [
        (token, token_start)
        for token, (token_start, token_end) in zip(completion.tokens, completion.token_offsets())
        if token_end > start and token_start < end
    ]
    if not picked:
        return SentenceSlice((), 0)
    return SentenceSlice(tuple(token for token, _ in picked), start - picked[0][1])


def detect(
    sentence: str,
    tokens: Sequence[TokenLogprob],
    offset: int,
    topic: str,
    preamble: str,
    accepted: Sequence[str],
    config: PipelineConfig,
    runtime: Runtime,
) -> tuple[list[ConceptScore], ValidationOutcome]:
    """
    Identify, score and validate the concepts of a sentence.

    :return: The concept scores and the validation outcome.
    """
    try:
        concepts = extract_concepts(
            sentence,
            topic,
            config.concept_method,
            backend=runtime.backend,
            params=config.auxiliary_params,
            preamble=preamble,
            accepted=accepted,
            tool=runtime.concept_tool,
        )
    except EmptyExtraction as err:
        logger.warning("%s; nothing to validate", err)
        return [], ValidationOutcome()

    aligned = [align_concept_tokens(concept, tokens, offset) for concept in concepts]
    scores = score_concepts(aligned, tokens, config.policy.method)
    outcome = validate_sentence(
        sentence,
        topic,
        select_uncertain(scores, config.policy),
        config.retrieval,
        config.policy,
        backend=runtime.backend,
        sources=runtime.sources,
        qtype=config.question_type,
        params=config.auxiliary_params,
    )
    return scores, outcome


def mitigate(
    sentence: str, topic: str, outcome: ValidationOutcome, config: PipelineConfig, runtime: Runtime
) -> RepairResult:
    evidence = outcome.failing_evidence
    if not evidence:
        logger.warning("no evidence to repair %r with; keeping it", sentence)
        return RepairResult.keep_original(sentence, evidence)
    try:
        return repair_sentence(
            sentence, topic, evidence, backend=runtime.backend, params=config.auxiliary_params
        )
    except EmptyRepair as err:
        logger.warning("%s; keeping the original sentence", err)
        return RepairResult.keep_original(sentence, evidence)


def process_sentence(
    index: int,
    sentence: str,
    sentence_slice: SentenceSlice,
    topic: str,
    preamble: str,
    accepted: Sequence[str],
    config: PipelineConfig,
    runtime: Runtime,
) -> SentenceTrace:
    """
    Run detection and, for a flagged sentence, mitigation.

    The backend of ``runtime`` should be a fresh RecordingBackend; its calls
    become the calls of the trace.

    With ``config.revalidate``, a changed repair is validated once more. The repair
    has no token probabilities, so all of its concepts are validated whatever
    ``validate_unscored`` says. The outcome is recorded and never repaired again.

    :param index: The index of the sentence in the run.
    :param sentence: The generated sentence.
    :param sentence_slice: The sentence's tokens.
    :param topic: The topic (or question) of the run.
    :param preamble: The generation prompt the sentence continues.
    :param accepted: The sentences accepted before this one.
    :param config: The pipeline configuration.
    :param runtime: The backend and retrieval clients.
    :return: The trace of the sentence.
    """
    scores, outcome = detect(
        sentence, sentence_slice.tokens, sentence_slice.offset, topic, preamble, accepted, config, runtime
    )

    repair = revalidation = None
    if outcome.hallucination_detected and config.mitigation_enabled:
        repair = mitigate(sentence, topic, outcome, config, runtime)
        if config.revalidate and repair.changed:
            # a repair carries no token probabilities, so every concept of it is unscored
            recheck = config.model_copy(
                update={"policy": config.policy.model_copy(update={"validate_unscored": True})}
            )
            _, revalidation = detect(repair.repaired, (), 0, topic, preamble, accepted, recheck, runtime)

    sentence_score = score_sentence(scores)
    logger.info(
        "sentence %d: score=%s hallucination=%s repaired=%s",
        index,
        "-" if sentence_score is None else f"{sentence_score:.3f}",
        outcome.hallucination_detected,
        repair is not None and repair.changed,
    )
    calls = runtime.backend.calls if isinstance(runtime.backend, RecordingBackend) else []
    return SentenceTrace(
        index=index,
        raw_sentence=sentence,
        tokens=sentence_slice.tokens,
        concepts=tuple(scores),
        sentence_score=sentence_score,
        validation=outcome,
        repair=repair,
        revalidation=revalidation,
        accepted_sentence=repair.repaired if repair is not None else sentence,
        calls=tuple(calls),
    )


class LoopOutcome(NamedTuple):
    traces: tuple[SentenceTrace, ...]
    stop_reason: StopReason
    unsegmented_text: str | None = None
    stopped_calls: tuple[BackendCall, ...] = ()


def run_sentence_loop(
    preamble: str,
    topic: str,
    config: PipelineConfig,
    runtime: Runtime,
    *,
    budget: int,
    separator: str = prompts.BLOCK_SEPARATOR,
    stop_when: StopCondition | None = None,
) -> LoopOutcome:
    """
    Generate sentences one at a time, appending each accepted sentence to the prompt.

    :param preamble: The task prompt.
    :param topic: The topic (or question) shown to the question and repair prompts.
    :param config: The pipeline configuration.
    :param runtime: The backend and retrieval clients.
    :param budget: The maximum number of sentences.
    :param separator: What goes between the preamble and the accepted sentences.
    :param stop_when: Ends the loop early (COMPLETED) once it holds for an accepted trace;
        without it, using up the budget is COMPLETED, otherwise BUDGET_EXHAUSTED.
    :return: The traces and why the loop stopped.
    :raises HaloError: Backend and retrieval errors, with ``partial_report`` set to
        the LoopOutcome so far.
    """
    traces: list[SentenceTrace] = []
    accepted: list[str] = []
    try:
        for index in range(budget):
            recorder = RecordingBackend.wrap(runtime.backend)
            prompt = prompts.continuation_prompt(preamble, accepted, separator)
            completion = recorder.complete(prompt, config.params)
            sentence, complete = segment_first_sentence(completion.text)
            if not sentence:
                logger.info("backend stopped after %d sentences", index)
                return LoopOutcome(tuple(traces), StopReason.BACKEND_STOPPED, None, tuple(recorder.calls))
            if not complete:
                logger.warning("no sentence boundary in %r; stopping", sentence)
                return LoopOutcome(
                    tuple(traces), StopReason.SEGMENTATION_FAILURE, sentence, tuple(recorder.calls)
                )

            trace = process_sentence(
                index,
                sentence,
                slice_sentence_tokens(completion, sentence),
                topic,
                preamble,
                accepted,
                config,
                runtime._replace(backend=recorder),
            )
            traces.append(trace)
            accepted.append(trace.accepted_sentence)
            if stop_when is not None and stop_when(trace):
                return LoopOutcome(tuple(traces), StopReason.COMPLETED)
    except HaloError as err:
        err.partial_report = LoopOutcome(tuple(traces), StopReason.ERROR)
        raise

    reason = StopReason.COMPLETED if stop_when is None else StopReason.BUDGET_EXHAUSTED
    return LoopOutcome(tuple(traces), reason)
