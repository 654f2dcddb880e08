import numpy as np
import pytest

from common.errors import EmptyCurve, EmptyInput, LengthMismatch, MissingIndex, NoScoredConcepts
from common.labels import ConceptSource, Label, ScoreMethod
from detection.concepts import Concept
from detection.validator import ValidationOutcome
from evaluation.analysis import (
    contingency,
    evaluate_predictions,
    predictions_from_report,
    probability_bins,
    scored_sentences,
    sentence_score,
)
from evaluation.metrics import (
    auc,
    detection_metrics,
    hallucination_rate,
    mitigation_outcome,
    pr_curve,
    precision_recall_at,
    recall_at_thresholds,
)
from evaluation.model import AnnotationRecord, BinLevel, ConceptLabel, CurvePoint, PredictionRecord, SentenceScope
from evaluation.synthetic import concept_signal_annotations, linear_trend_annotations
from pipeline.model import GenerationReport, SentenceTrace

H = Label.HALLUCINATED
N = Label.NOT_HALLUCINATED


def record(
    topic: str, index: int, label: Label, *concepts: tuple[Label, tuple[float, ...] | None], **kwargs
) -> AnnotationRecord:
    return AnnotationRecord(
        topic=topic,
        sentence_index=index,
        sentence=f"Sentence {index}.",
        sentence_label=label,
        concept_labels=tuple(
            ConceptLabel(concept_text=f"c{i}", label=concept_label, token_probs=probs)
            for i, (concept_label, probs) in enumerate(concepts)
        ),
        **kwargs,
    )


def test_detection_metrics_example():
    metrics = detection_metrics([True, True, False, False], [True, False, False, False])
    assert metrics.accuracy == 0.75
    assert metrics.precision_hallucinated == 0.5
    assert metrics.recall_hallucinated == 1.0
    assert (metrics.tp, metrics.fp, metrics.tn, metrics.fn) == (1, 1, 2, 0)


def test_perfect_detector():
    golds = [True, False, True, False]
    metrics = detection_metrics(golds, golds)
    assert metrics.accuracy == 1.0
    assert metrics.precision_hallucinated == metrics.recall_hallucinated == 1.0
    assert metrics.precision_not == metrics.recall_not == 1.0


def test_silent_detector():
    metrics = detection_metrics([False, False, False], [True, False, True])
    assert metrics.recall_hallucinated == 0.0
    assert metrics.precision_hallucinated is None


def test_detection_metrics_against_a_counter():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        preds = [bool(x) for x in rng.random(n) < 0.5]
        golds = [bool(x) for x in rng.random(n) < 0.3]
        metrics = detection_metrics(preds, golds)

        pairs = list(zip(preds, golds))
        tp, fp = pairs.count((True, True)), pairs.count((True, False))
        tn, fn = pairs.count((False, False)), pairs.count((False, True))
        assert (metrics.tp, metrics.fp, metrics.tn, metrics.fn) == (tp, fp, tn, fn)
        assert metrics.accuracy == pytest.approx((tp + tn) / n)
        if tp + fn:
            assert metrics.recall_hallucinated == pytest.approx(tp / (tp + fn))


@pytest.mark.parametrize("preds, golds, error", [([True], [True, False], LengthMismatch), ([], [], EmptyInput)])
def test_detection_metrics_errors(preds, golds, error):
    with pytest.raises(error):
        detection_metrics(preds, golds)


def test_pr_curve_two_points():
    assert precision_recall_at([0.1, 0.9], [True, False], 0.5) == (1.0, 1.0)
    curve = pr_curve([0.1, 0.9], [True, False])
    assert [p.threshold for p in curve][:2] == [0.1, 0.9]
    assert curve[0] == CurvePoint(0.1, 1.0, 0.0)
    assert curve[1].recall == 1.0
    assert curve[-1].recall == 1.0
    assert curve[-1].precision == 0.5


def test_pr_curve_all_golds_false():
    assert pr_curve([0.2, 0.4], [False, False]) == []


def test_pr_curve_identical_scores():
    curve = pr_curve([0.3, 0.3, 0.3], [True, False, True])
    assert len(curve) == 2
    assert curve[0].recall == 0.0
    assert curve[1].recall == 1.0


def test_pr_curve_recall_never_decreases():
    rng = np.random.default_rng(11)
    scores = rng.random(30).tolist()
    golds = (rng.random(30) < 0.5).tolist()
    golds[0] = True
    recalls = [point.recall for point in pr_curve(scores, golds)]
    assert recalls == sorted(recalls)


def test_pr_curve_length_mismatch():
    with pytest.raises(LengthMismatch):
        pr_curve([0.1], [True, False])


def test_auc_unit_square_and_triangle():
    assert auc([CurvePoint(0.0, 1.0, 0.0), CurvePoint(1.0, 1.0, 1.0)]) == 1.0
    assert auc([CurvePoint(0.0, 1.0, 0.0), CurvePoint(1.0, 0.0, 1.0)]) == 0.5


def test_auc_empty_curve():
    with pytest.raises(EmptyCurve):
        auc([])


def riemann_area(curve: list[CurvePoint], steps: int = 2000) -> float:
    """Midpoint sums over each segment of the linearly interpolated curve."""
    points = sorted(curve, key=lambda p: p.recall)
    area = 0.0
    for left, right in zip(points, points[1:]):
        width = right.recall - left.recall
        if width == 0:
            continue
        t = (np.arange(steps) + 0.5) / steps
        heights = left.precision + t * (right.precision - left.precision)
        area += float(np.sum(heights)) * width / steps
    return area


def test_auc_matches_a_riemann_oracle():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        scores = rng.random(n).round(2).tolist()
        golds = (rng.random(n) < 0.4).tolist()
        curve = pr_curve(scores, golds)
        if not curve:
            continue
        checked += 1
        assert auc(curve) == pytest.approx(riemann_area(curve), abs=1e-6)
    assert checked > 90


def test_auc_ignores_duplicated_points():
    curve = pr_curve([0.1, 0.4, 0.5, 0.8, 0.9], [True, False, True, False, True])
    assert auc(curve + curve) == pytest.approx(auc(curve))


def test_recall_at_thresholds():
    pairs = recall_at_thresholds([0.1, 0.3, 0.6], [True, True, False], [0.2, 0.5])
    assert pairs == [(0.2, 0.5), (0.5, 1.0)]


def test_hallucination_rate():
    assert hallucination_rate([H, N, N, H]) == 0.5
    with pytest.raises(EmptyInput):
        hallucination_rate([])


def test_contingency_examples():
    report = contingency([record("a", 0, H), record("a", 1, H), record("a", 2, N)])
    assert report.per_index[1].A == 1
    assert report.per_index[2].B == 1
    assert (report.total.A, report.total.B, report.total.C, report.total.D) == (1, 1, 0, 0)

    assert contingency([record("b", 0, N), record("b", 1, N)]).total.D == 1
    assert contingency([record("c", 0, N), record("c", 1, H)]).total.C == 1


def test_contingency_counts_every_later_sentence():
    rng = np.random.default_rng(3)
    records = [
        record(f"topic {t}", i, Label.from_bool(bool(rng.random() < 0.3)))
        for t in range(10)
        for i in range(5)
    ]
    report = contingency(reversed(records))
    assert report.total.total == 40
    assert sorted(report.per_index) == [1, 2, 3, 4]
    assert all(counts.total == 10 for counts in report.per_index.values())


def test_contingency_missing_index():
    with pytest.raises(MissingIndex):
        contingency([record("a", 0, N), record("a", 2, H)])


def test_mitigation_outcome_rates():
    before = [H] * 4081 + [H] * 3004 + [N] * 2826 + [N] * 89
    after = [N] * 4081 + [H] * 3004 + [N] * 2826 + [H] * 89
    outcome = mitigation_outcome(before, after)
    assert outcome.success_rate == pytest.approx(0.576, abs=0.001)
    assert outcome.deterioration_rate == pytest.approx(0.0306, abs=0.0005)
    assert outcome.success_rate == pytest.approx(4081 / 7085, abs=1e-12)


def test_perfect_and_noop_mitigation():
    perfect = mitigation_outcome([H, H], [N, N])
    assert perfect.success_rate == 1.0
    assert perfect.deterioration_rate is None

    noop = mitigation_outcome([H, N, H], [H, N, H])
    assert noop.success_rate == 0.0
    assert noop.deterioration_rate == 0.0


def test_mitigation_length_mismatch():
    with pytest.raises(LengthMismatch):
        mitigation_outcome([H], [])


def test_separable_bins():
    records = [record("s", 0, H, (H, (0.02,))), record("s", 1, N, (N, (0.98,)))]
    bins = probability_bins(records)
    assert len(bins) == 10
    assert bins[0].fraction == 1.0
    assert bins[-1].fraction == 0.0
    assert all(b.fraction is None for b in bins[1:-1])


def test_score_one_goes_to_the_last_bin():
    bins = probability_bins([record("s", 0, N, (N, (1.0,)))], bins=4)
    assert bins[-1].count == 1
    assert bins[-1].high == 1.0


def test_constant_labels_give_constant_fractions():
    records = [record("s", i, H, (H, (p,))) for i, p in enumerate([0.05, 0.33, 0.5, 0.71, 0.99])]
    fractions = {b.fraction for b in probability_bins(records) if b.count}
    assert fractions == {1.0}


def test_bins_follow_a_linear_trend():
    records = linear_trend_annotations(np.random.default_rng(5))
    fractions = [b.fraction for b in probability_bins(records)]
    assert all(a > b for a, b in zip(fractions, fractions[1:]))


def test_sentence_level_bins():
    records = [record("s", 0, H, (H, (0.1, 0.2)), (N, (0.9,))), record("s", 1, N, (N, (0.8,)))]
    bins = probability_bins(records, method=ScoreMethod.AVERAGE, level=BinLevel.SENTENCE)
    assert bins[1].hallucinated == 1
    assert bins[8].count == 1


def test_bins_without_probabilities():
    with pytest.raises(NoScoredConcepts):
        probability_bins([record("s", 0, H, (H, None))])


def test_sentence_scores_by_scope():
    annotated = record("s", 0, H, (H, (0.3, 0.6)), (N, (0.9,)), token_probs=(0.3, 0.6, 0.05, 0.9))
    assert sentence_score(annotated) == 0.3
    assert sentence_score(annotated, ScoreMethod.AVERAGE) == pytest.approx(0.45)
    assert sentence_score(annotated, scope=SentenceScope.ALL_TOKENS) == 0.05
    assert sentence_score(record("s", 1, N)) is None


def test_concept_tokens_carry_the_signal():
    wins = 0
    for seed in range(100):
        records = concept_signal_annotations(np.random.default_rng(seed))
        concept = auc(pr_curve(*scored_sentences(records, scope=SentenceScope.CONCEPT_TOKENS)))
        all_tokens = auc(pr_curve(*scored_sentences(records, scope=SentenceScope.ALL_TOKENS)))
        wins += concept > all_tokens
    assert wins >= 95


def test_annotation_schema_alias():
    line = '{"schema": "halo-annotations/1", "topic": "t", "sentence_index": 0, "sentence": "S.", "sentence_label": "hallucinated"}'
    parsed = AnnotationRecord.model_validate_json(line)
    assert parsed.schema_version == "halo-annotations/1"
    assert '"schema":"halo-annotations/1"' in parsed.model_dump_json()


def test_annotation_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        record("s", 0, H, token_probs=(1.5,))


def test_predictions_from_report():
    concept = Concept(text="1956", char_range=(0, 4), source=ConceptSource.RULE_BASED)
    traces = (
        SentenceTrace(index=0, raw_sentence="A.", sentence_score=0.9, validation=ValidationOutcome(), accepted_sentence="A."),
        SentenceTrace(
            index=1,
            raw_sentence="1956.",
            sentence_score=0.2,
            validation=ValidationOutcome(hallucination_detected=True, failing_concept=concept),
            accepted_sentence="1956.",
        ),
    )
    report = GenerationReport(topic="t", traces=traces, final_text="A. 1956.")
    predictions = predictions_from_report(report)
    assert [(p.sentence_index, p.hallucination_detected, p.score) for p in predictions] == [(0, False, 0.9), (1, True, 0.2)]


def test_evaluate_predictions():
    annotations = [
        record("t", 0, N, (N, (0.9,))),
        record("t", 1, H, (H, (0.2,))),
        record("t", 2, N, (N, (0.7,))),
    ]
    predictions = [
        PredictionRecord(topic="t", sentence_index=0, hallucination_detected=False, score=0.9),
        PredictionRecord(topic="t", sentence_index=1, hallucination_detected=True, score=0.2, label_after_repair=N),
        PredictionRecord(topic="t", sentence_index=2, hallucination_detected=True, score=0.4, label_after_repair=H),
    ]
    summary = evaluate_predictions(annotations, predictions)

    assert summary.sentences == 3
    assert summary.detection.tp == 1
    assert summary.detection.fp == 1
    assert summary.auc == pytest.approx(auc(pr_curve([0.9, 0.2, 0.4], [False, True, False])))
    assert summary.contingency.total.total == 2
    assert summary.mitigation.success_rate == 1.0
    assert summary.mitigation.deterioration_rate == 1.0
    assert sum(b.count for b in summary.bins) == 3


def test_evaluate_unknown_prediction():
    with pytest.raises(MissingIndex):
        evaluate_predictions(
            [record("t", 0, N)], [PredictionRecord(topic="u", sentence_index=0, hallucination_detected=False)]
        )
