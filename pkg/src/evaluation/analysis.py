"""
Analyses over annotated sentences: propagation counts, probability bins, sentence
scores, and the joint evaluation of a prediction file against gold annotations.
"""

from collections import defaultdict
from collections.abc import Iterable, Sequence
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.errors import EmptyInput, MissingIndex, NoScoredConcepts
from common.labels import Label, ScoreMethod
from detection.scoring import score_concept
from evaluation.metrics import auc, detection_metrics, mitigation_outcome, pr_curve
from evaluation.model import (
    AnnotationRecord,
    BinLevel,
    ContingencyCounts,
    ContingencyReport,
    CurvePoint,
    DetectionMetrics,
    MitigationOutcome,
    PredictionRecord,
    ProbabilityBin,
    SentenceScope,
)
from pipeline.model import GenerationReport

logger = logging.getLogger(__name__)


def group_by_topic(records: Iterable[AnnotationRecord]) -> dict[str, list[AnnotationRecord]]:
    """
    Group records by topic, each group sorted by sentence index.

    :raises MissingIndex: If a topic's indices are not exactly 0, 1, 2, ...
    """
    groups: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for record in records:
        groups[record.topic].append(record)

    for topic, group in groups.items():
        group.sort(key=lambda r: r.sentence_index)
        indices = [r.sentence_index for r in group]
        if indices != list(range(len(group))):
            raise MissingIndex(f"Sentence indices of topic {topic!r} are not contiguous from 0: {indices}")
    return dict(groups)


def contingency(records: Iterable[AnnotationRecord]) -> ContingencyReport:
    """
    Relate each sentence's label to whether an earlier sentence of the same topic
    is hallucinated. The first sentence of a topic has no earlier sentence and is skipped.

    :param records: The annotated sentences of one or more topics.
    :return: The A/B/C/D counts per sentence index (from 1) and in total.
    :raises MissingIndex: If a topic's indices are not contiguous from 0.
    """
    per_index: dict[int, ContingencyCounts] = defaultdict(ContingencyCounts)
    for group in group_by_topic(records).values():
        seen_hallucination = False
        for record in group:
            current = record.sentence_label.is_hallucinated
            if record.sentence_index > 0:
                match seen_hallucination, current:
                    case True, True:
                        cell = ContingencyCounts(A=1)
                    case True, False:
                        cell = ContingencyCounts(B=1)
                    case False, True:
                        cell = ContingencyCounts(C=1)
                    case _:
                        cell = ContingencyCounts(D=1)
                per_index[record.sentence_index] += cell
            seen_hallucination |= current

    total = sum(per_index.values(), ContingencyCounts())
    return ContingencyReport(per_index=dict(sorted(per_index.items())), total=total)


def concept_scores(
    records: Iterable[AnnotationRecord], method: ScoreMethod
) -> list[tuple[float, Label]]:
    """:return: The (score, label) of every annotated concept carrying token probabilities."""
    return [
        (score_concept(concept.token_probs, method), concept.label)
        for record in records
        for concept in record.concept_labels
        if concept.token_probs is not None
    ]


def sentence_score(
    record: AnnotationRecord,
    method: ScoreMethod = ScoreMethod.MINIMUM,
    scope: SentenceScope = SentenceScope.CONCEPT_TOKENS,
) -> float | None:
    """
    Score an annotated sentence.

    :param record: The sentence.
    :param method: How the tokens of each concept are aggregated (concept scope only).
    :param scope: Concept tokens or all tokens of the sentence.
    :return: The score, or None if the record lacks the needed probabilities.
    """
    match scope:
        case SentenceScope.CONCEPT_TOKENS:
            scores = [
                score_concept(concept.token_probs, method)
                for concept in record.concept_labels
                if concept.token_probs is not None
            ]
            return min(scores) if scores else None
        case SentenceScope.ALL_TOKENS:
            return min(record.token_probs) if record.token_probs else None
        case _:
            raise ValueError(f"Unknown sentence scope: {scope}")


def scored_sentences(
    records: Iterable[AnnotationRecord],
    method: ScoreMethod = ScoreMethod.MINIMUM,
    scope: SentenceScope = SentenceScope.CONCEPT_TOKENS,
) -> tuple[list[float], list[bool]]:
    """
    :return: The scores and gold labels of the sentences that can be scored in the scope.
    """
    scores, golds = [], []
    for record in records:
        score = sentence_score(record, method, scope)
        if score is not None:
            scores.append(score)
            golds.append(record.sentence_label.is_hallucinated)
    return scores, golds


def probability_bins(
    records: Sequence[AnnotationRecord],
    method: ScoreMethod = ScoreMethod.MINIMUM,
    bins: int = 10,
    level: BinLevel = BinLevel.CONCEPT,
) -> list[ProbabilityBin]:
    """
    Bucket concepts (or sentences) by score into equal-width bins over [0, 1] and
    count the hallucinated ones per bin.

    :param records: The annotated sentences.
    :param method: The concept score aggregation.
    :param bins: The number of bins.
    :param level: Bin concepts by their score, or sentences by their concept-scope score.
    :return: Every bin in ascending order, empty ones included.
    :raises NoScoredConcepts: If no concept carries token probabilities.
    """
    if bins < 1:
        raise ValueError("bins must be positive")

    match level:
        case BinLevel.CONCEPT:
            items = concept_scores(records, method)
        case BinLevel.SENTENCE:
            scores, golds = scored_sentences(records, method, SentenceScope.CONCEPT_TOKENS)
            items = [(s, Label.from_bool(g)) for s, g in zip(scores, golds)]
        case _:
            raise ValueError(f"Unknown bin level: {level}")
    if not items:
        raise NoScoredConcepts("No annotated concept carries token probabilities")

    scores = np.array([score for score, _ in items])
    hallucinated = np.array([label.is_hallucinated for _, label in items])
    index = np.minimum((scores * bins).astype(int), bins - 1)
    counts = np.bincount(index, minlength=bins)
    positives = np.bincount(index, weights=hallucinated.astype(np.float64), minlength=bins)
    edges = np.linspace(0.0, 1.0, bins + 1)
    return [
        ProbabilityBin(
            low=float(edges[i]),
            high=float(edges[i + 1]),
            count=int(counts[i]),
            hallucinated=int(positives[i]),
        )
        for i in range(bins)
    ]


def predictions_from_report(report: GenerationReport) -> list[PredictionRecord]:
    """Turn the traces of a run into prediction records for evaluation."""
    return [
        PredictionRecord(
            topic=report.topic,
            sentence_index=trace.index,
            hallucination_detected=trace.hallucination_detected,
            score=trace.sentence_score,
        )
        for trace in report.traces
    ]


class EvaluationSummary(BaseModel):
    """Everything ``evaluate`` reports for a prediction file."""

    model_config = ConfigDict(frozen=True)

    sentences: int
    detection: DetectionMetrics
    curve: list[CurvePoint] = []
    auc: float | None = None
    contingency: ContingencyReport
    mitigation: MitigationOutcome | None = None
    bins: list[ProbabilityBin] | None = None


def evaluate_predictions(
    annotations: Sequence[AnnotationRecord],
    predictions: Sequence[PredictionRecord],
    bins: int = 10,
) -> EvaluationSummary:
    """
    Evaluate predictions against the annotations of the same sentences.

    :param annotations: The gold annotations.
    :param predictions: The predictions, matched to annotations by (topic, sentence_index).
    :param bins: The number of probability bins.
    :return: Detection metrics, the PR curve of the prediction scores and its area,
        propagation counts, the mitigation outcome of repaired sentences, and
        probability bins of the annotated concepts (when they carry probabilities).
    :raises MissingIndex: If a prediction has no annotation.
    :raises EmptyInput: If there are no predictions.
    """
    if not predictions:
        raise EmptyInput("No predictions")
    gold = {record.key: record for record in annotations}
    if len(gold) != len(annotations):
        raise MissingIndex("Duplicate (topic, sentence_index) in annotations")

    matched = []
    for prediction in predictions:
        if prediction.key not in gold:
            raise MissingIndex(
                f"No annotation for topic {prediction.topic!r} sentence {prediction.sentence_index}"
            )
        matched.append((prediction, gold[prediction.key]))

    detection = detection_metrics(
        [p.hallucination_detected for p, _ in matched],
        [g.sentence_label.is_hallucinated for _, g in matched],
    )

    scored = [(p.score, g.sentence_label.is_hallucinated) for p, g in matched if p.score is not None]
    curve = pr_curve([s for s, _ in scored], [h for _, h in scored])
    area = auc(curve) if curve else None

    repaired = [
        (g.sentence_label, p.label_after_repair)
        for p, g in matched
        if p.hallucination_detected and p.label_after_repair is not None
    ]
    mitigation = mitigation_outcome([b for b, _ in repaired], [a for _, a in repaired]) if repaired else None

    try:
        probability = probability_bins(annotations, bins=bins)
    except NoScoredConcepts:
        logger.info("annotations carry no token probabilities; skipping bins")
        probability = None

    return EvaluationSummary(
        sentences=len(matched),
        detection=detection,
        curve=curve,
        auc=area,
        contingency=contingency(annotations),
        mitigation=mitigation,
        bins=probability,
    )
