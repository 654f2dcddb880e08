import logging

from common import prompts
from common.errors import HaloError
from pipeline.model import GenerationReport, PipelineConfig, Runtime, joined_text
from pipeline.steps import LoopOutcome, run_sentence_loop

logger = logging.getLogger(__name__)


def report_from(topic: str, outcome: LoopOutcome) -> GenerationReport:
    return GenerationReport(
        topic=topic,
        traces=outcome.traces,
        final_text=joined_text(outcome.traces),
        stop_reason=outcome.stop_reason,
        unsegmented_text=outcome.unsegmented_text,
        stopped_calls=outcome.stopped_calls,
    )


def run_article(topic: str, config: PipelineConfig, runtime: Runtime) -> GenerationReport:
    """
    Write an article about a topic one sentence at a time, detecting and repairing
    hallucinations before each sentence enters the context of the next.

    :param topic: The topic.
    :param config: The pipeline configuration.
    :param runtime: The backend and retrieval clients.
    :return: The report with one trace per accepted sentence.
    :raises HaloError: Backend and retrieval errors, with the partial GenerationReport
        attached as ``partial_report``.
    """
    topic = topic.strip()
    if not topic:
        raise ValueError("Topic must be non-empty")

    logger.info("generating article about %r", topic)
    try:
        outcome = run_sentence_loop(
            prompts.article_preamble(topic), topic, config, runtime, budget=config.num_sentences
        )
    except HaloError as err:
        if isinstance(err.partial_report, LoopOutcome):
            err.partial_report = report_from(topic, err.partial_report)
        raise
    return report_from(topic, outcome)
