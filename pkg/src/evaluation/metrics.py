"""
Detection and mitigation metrics.

Scores are probability scores: a low score means an uncertain sentence, and at
threshold t a sentence is predicted hallucinated iff its score is below t.
"""

from collections.abc import Sequence

import numpy as np

from common.errors import EmptyCurve, EmptyInput, LengthMismatch
from common.labels import Label
from evaluation.model import CurvePoint, DetectionMetrics, MitigationOutcome


def check_pairs(left: Sequence, right: Sequence, what: str) -> None:
    if len(left) != len(right):
        raise LengthMismatch(f"{what}: {len(left)} vs {len(right)} entries")
    if not left:
        raise EmptyInput(f"{what}: no entries")


def ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def detection_metrics(predictions: Sequence[bool], golds: Sequence[bool]) -> DetectionMetrics:
    """
    Confusion-matrix metrics of a sentence-level detector.

    :param predictions: True where the detector flagged the sentence.
    :param golds: True where the sentence is annotated hallucinated.
    :return: The metrics; hallucinated is the positive class.
    :raises LengthMismatch: If the lists differ in length.
    :raises EmptyInput: If the lists are empty.
    """
    check_pairs(predictions, golds, "predictions and golds")
    pred = np.asarray(predictions, dtype=bool)
    gold = np.asarray(golds, dtype=bool)

    tp = int(np.sum(pred & gold))
    fp = int(np.sum(pred & ~gold))
    tn = int(np.sum(~pred & ~gold))
    fn = int(np.sum(~pred & gold))
    return DetectionMetrics(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=(tp + tn) / len(pred),
        precision_hallucinated=ratio(tp, tp + fp),
        recall_hallucinated=ratio(tp, tp + fn),
        precision_not=ratio(tn, tn + fn),
        recall_not=ratio(tn, tn + fp),
    )


def precision_recall_at(
    scores: Sequence[float], gold_hallucinated: Sequence[bool], threshold: float
) -> tuple[float, float]:
    """
    Precision and recall of "score < threshold" against the gold labels.

    Precision without any positive prediction is 1.0; recall without any
    hallucinated gold sentence is 0.0.
    """
    check_pairs(scores, gold_hallucinated, "scores and golds")
    values = np.asarray(scores, dtype=np.float64)
    gold = np.asarray(gold_hallucinated, dtype=bool)
    pred = values < threshold

    tp = int(np.sum(pred & gold))
    predicted = int(np.sum(pred))
    positives = int(np.sum(gold))
    precision = tp / predicted if predicted else 1.0
    recall = tp / positives if positives else 0.0
    return precision, recall


def pr_curve(scores: Sequence[float], gold_hallucinated: Sequence[bool]) -> list[CurvePoint]:
    """
    The precision-recall curve of thresholding the scores.

    One point per distinct score plus one just above the largest score, so the
    curve runs from "nothing flagged" (recall 0, precision 1) to "everything
    flagged" (recall 1). Recall never decreases along the curve.

    :param scores: The sentence probability scores.
    :param gold_hallucinated: The gold labels.
    :return: The points by ascending threshold; empty when no gold sentence is
        hallucinated (recall is undefined).
    :raises LengthMismatch: If the lists differ in length.
    """
    if len(scores) != len(gold_hallucinated):
        raise LengthMismatch(f"scores and golds: {len(scores)} vs {len(gold_hallucinated)} entries")
    if not any(gold_hallucinated):
        return []

    distinct = np.unique(np.asarray(scores, dtype=np.float64))
    thresholds = np.append(distinct, np.nextafter(distinct[-1], np.inf))
    return [
        CurvePoint(float(t), *precision_recall_at(scores, gold_hallucinated, float(t)))
        for t in thresholds
    ]


def auc(curve: Sequence[CurvePoint]) -> float:
    """
    The trapezoidal area under a precision-recall curve.

    :param curve: The points; sorted by recall here (stably, so equal-recall
        points keep their order).
    :return: The area, in [0, 1].
    :raises EmptyCurve: If the curve has no points.
    """
    if not curve:
        raise EmptyCurve("Cannot integrate an empty curve")
    points = sorted(curve, key=lambda point: point.recall)
    recall = np.array([point.recall for point in points])
    precision = np.array([point.precision for point in points])
    return float(np.clip(np.trapezoid(precision, recall), 0.0, 1.0))


def recall_at_thresholds(
    scores: Sequence[float], gold_hallucinated: Sequence[bool], thresholds: Sequence[float]
) -> list[tuple[float, float]]:
    """
    The recall of the detector at each probability threshold.

    :return: (threshold, recall) pairs in the given order.
    """
    return [(t, precision_recall_at(scores, gold_hallucinated, t)[1]) for t in thresholds]


def hallucination_rate(labels: Sequence[Label]) -> float:
    """
    :return: The fraction of hallucinated sentences.
    :raises EmptyInput: If there are no labels.
    """
    if not labels:
        raise EmptyInput("No labels")
    return sum(label.is_hallucinated for label in labels) / len(labels)


def mitigation_outcome(before: Sequence[Label], after: Sequence[Label]) -> MitigationOutcome:
    """
    Count how repairs changed the labels of flagged sentences.

    :param before: The gold label of each flagged sentence as generated.
    :param after: The gold label of the same sentence after mitigation.
    :return: The four before/after cells and the success and deterioration rates.
    :raises LengthMismatch: If the lists differ in length.
    """
    if len(before) != len(after):
        raise LengthMismatch(f"before and after: {len(before)} vs {len(after)} entries")

    pairs = [(b.is_hallucinated, a.is_hallucinated) for b, a in zip(before, after)]
    tp_fixed = pairs.count((True, False))
    tp_unfixed = pairs.count((True, True))
    fp_preserved = pairs.count((False, False))
    fp_broken = pairs.count((False, True))
    return MitigationOutcome(
        tp_fixed=tp_fixed,
        tp_unfixed=tp_unfixed,
        fp_preserved=fp_preserved,
        fp_broken=fp_broken,
        success_rate=ratio(tp_fixed, tp_fixed + tp_unfixed),
        deterioration_rate=ratio(fp_broken, fp_preserved + fp_broken),
    )
