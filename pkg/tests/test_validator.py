import itertools

import pytest

from common import prompts
from common.errors import EmptyQuestion
from common.labels import ConceptSource, QuestionType, RetrievalMode
from detection.concepts import Concept
from detection.scoring import ConceptScore, DetectionPolicy
from detection.validator import (
    Answer,
    ValidationOutcome,
    ValidationQuestion,
    answer_validation,
    make_validation_question,
    parse_verdict,
    validate_sentence,
)
from gateway.scripted import ScriptedBackend
from retrieval.corpus import Document, LocalCorpus
from retrieval.model import RetrievalConfig
from retrieval.retrieve import KnowledgeSources

from conftest import evidence

TOPIC = "John Russell Reynolds"
SENTENCE = "Reynolds was born in London in 1820."
DOC = "John Russell Reynolds was born in London in 1828."
CORPUS = KnowledgeSources(corpus=LocalCorpus((Document("reynolds", DOC),)))
LOCAL = RetrievalConfig(mode=RetrievalMode.LOCAL_CORPUS, top_k=1)


def concept(text: str) -> Concept:
    start = SENTENCE.index(text)
    return Concept(text=text, char_range=(start, start + len(text)), source=ConceptSource.RULE_BASED)


def score(text: str, value: float) -> ConceptScore:
    return ConceptScore(concept=concept(text).model_copy(update={"token_range": (0, 1)}), score=value, probabilities=(value,))


def script_concept(backend, text: str, question: str, reply: str | None) -> None:
    """Script question creation and answering for one concept."""
    backend.add(prompts.question_prompt(SENTENCE, TOPIC, text), question)
    if reply is not None:
        backend.add(prompts.answer_prompt([DOC], TOPIC, question), reply)


@pytest.mark.parametrize(
    "reply, answer",
    [
        ("Yes.", Answer.YES),
        ("No, he was born in 1828.", Answer.NO),
        ("It is unclear from the context.", Answer.UNPARSEABLE),
        ("  YES", Answer.YES),
        ('"No"', Answer.NO),
        ("Nobody knows.", Answer.UNPARSEABLE),
        ("", Answer.UNPARSEABLE),
    ],
)
def test_parse_verdict(reply, answer):
    assert parse_verdict(reply) is answer


@pytest.mark.parametrize(
    "text, qtype, question",
    [
        ("London", QuestionType.YES_NO, "Was John Russell Reynolds born in London?"),
        ("1820", QuestionType.YES_NO, "Was John Russell Reynolds born in 1820?"),
        ("London", QuestionType.WH, "Where was John Russell Reynolds born?"),
    ],
)
def test_make_validation_question(scripted, text, qtype, question):
    prompt = prompts.question_prompt(SENTENCE, TOPIC, text, wh=qtype is QuestionType.WH)
    scripted.add(prompt, f"\n{question}\nExtra line")
    made = make_validation_question(SENTENCE, TOPIC, concept(text), qtype, backend=scripted)
    assert made.question == question
    assert made.qtype is qtype


def test_question_prompt_layout():
    assert prompts.question_prompt(SENTENCE, TOPIC, "London") == (
        f"{SENTENCE}\n\nFor the above sentence about {TOPIC}, "
        "generate a yes/no question that tests the correctness of London."
    )


def test_blank_question_is_empty_question(scripted):
    scripted.add(prompts.question_prompt(SENTENCE, TOPIC, "London"), " \n ")
    with pytest.raises(EmptyQuestion):
        make_validation_question(SENTENCE, TOPIC, concept("London"), QuestionType.YES_NO, backend=scripted)


def test_answer_validation_prompt(scripted):
    question = ValidationQuestion(concept=concept("1820"), question="Was John Russell Reynolds born in 1820?")
    snippets = [evidence("First snippet."), evidence("Second snippet.")]
    expected = (
        "First snippet.\n\nSecond snippet.\n\n"
        f"Answer the below question about {TOPIC} in Yes or No based on the above context.\n\n"
        "Was John Russell Reynolds born in 1820?"
    )
    scripted.add(expected, "No, he was born in 1828.")
    verdict = answer_validation(question, snippets, TOPIC, backend=scripted)
    assert verdict.answer is Answer.NO
    assert verdict.raw_reply == "No, he was born in 1828."


def test_greedy_exit_on_first_failure(scripted):
    script_concept(scripted, "1820", "Was John Russell Reynolds born in 1820?", "No.")
    outcome = validate_sentence(
        SENTENCE,
        TOPIC,
        [score("1820", 0.1), score("London", 0.4)],
        LOCAL,
        DetectionPolicy(),
        backend=scripted,
        sources=CORPUS,
    )
    assert outcome.hallucination_detected
    assert outcome.failing_concept.text == "1820"
    assert len(outcome.per_concept) == 1
    # the evidence recorded is the evidence shown to the answering prompt
    assert [e.text for e in outcome.failing_evidence] == [DOC]
    assert scripted.remaining() == 0


def test_all_pass(scripted):
    script_concept(scripted, "1820", "Was he born in 1820?", "Yes")
    script_concept(scripted, "London", "Was he born in London?", "Yes, in London.")
    outcome = validate_sentence(
        SENTENCE, TOPIC, [score("1820", 0.1), score("London", 0.4)], LOCAL, DetectionPolicy(), backend=scripted, sources=CORPUS
    )
    assert not outcome.hallucination_detected
    assert outcome.failing_concept is None
    assert len(outcome.per_concept) == 2


def test_empty_concept_list():
    outcome = validate_sentence(SENTENCE, TOPIC, [], LOCAL, DetectionPolicy(), backend=None, sources=CORPUS)
    assert not outcome.hallucination_detected
    assert outcome.per_concept == ()


@pytest.mark.parametrize("strict, detected", [(True, True), (False, False)])
def test_unparseable_counts_only_when_strict(scripted, strict, detected):
    script_concept(scripted, "London", "Was he born in London?", "Maybe.")
    outcome = validate_sentence(
        SENTENCE, TOPIC, [score("London", 0.2)], LOCAL, DetectionPolicy(strict=strict), backend=scripted, sources=CORPUS
    )
    assert outcome.hallucination_detected is detected
    assert outcome.per_concept[0].verdict.answer is Answer.UNPARSEABLE


def test_empty_retrieval_fails_when_strict(scripted):
    nothing = KnowledgeSources(corpus=LocalCorpus(()))
    scripted.add(prompts.question_prompt(SENTENCE, TOPIC, "London"), "Was he born in London?")
    outcome = validate_sentence(
        SENTENCE, TOPIC, [score("London", 0.2)], LOCAL, DetectionPolicy(), backend=scripted, sources=nothing
    )
    assert outcome.hallucination_detected
    assert outcome.per_concept[0].evidence == ()
    # no answering call without evidence
    assert len(scripted.prompts) == 1


def test_empty_retrieval_is_answered_when_lenient(scripted):
    nothing = KnowledgeSources(corpus=LocalCorpus(()))
    scripted.add(prompts.question_prompt(SENTENCE, TOPIC, "London"), "Was he born in London?")
    scripted.add(prompts.answer_prompt([], TOPIC, "Was he born in London?"), "Yes.")
    outcome = validate_sentence(
        SENTENCE, TOPIC, [score("London", 0.2)], LOCAL, DetectionPolicy(strict=False), backend=scripted, sources=nothing
    )
    assert not outcome.hallucination_detected


def test_blank_question_skips_the_concept(scripted, caplog):
    scripted.add(prompts.question_prompt(SENTENCE, TOPIC, "1820"), "")
    script_concept(scripted, "London", "Was he born in London?", "No")
    outcome = validate_sentence(
        SENTENCE, TOPIC, [score("1820", 0.1), score("London", 0.4)], LOCAL, DetectionPolicy(), backend=scripted, sources=CORPUS
    )
    assert outcome.failing_concept.text == "London"
    # only the validated concept is recorded
    assert [v.question.concept.text for v in outcome.per_concept] == ["London"]
    assert "skipping concept" in caplog.text


def test_blank_question_then_passing_concepts(scripted):
    scripted.add(prompts.question_prompt(SENTENCE, TOPIC, "1820"), "   ")
    script_concept(scripted, "London", "Was he born in London?", "Yes")
    outcome = validate_sentence(
        SENTENCE, TOPIC, [score("1820", 0.1), score("London", 0.4)], LOCAL, DetectionPolicy(), backend=scripted, sources=CORPUS
    )
    assert not outcome.hallucination_detected
    assert len(outcome.per_concept) == 1
    assert scripted.remaining() == 0


def test_wh_questions_are_only_generated(scripted):
    scripted.add(prompts.question_prompt(SENTENCE, TOPIC, "London", wh=True), "Where was he born?")
    outcome = validate_sentence(
        SENTENCE,
        TOPIC,
        [score("London", 0.2)],
        LOCAL,
        DetectionPolicy(),
        backend=scripted,
        sources=CORPUS,
        qtype=QuestionType.WH,
    )
    assert not outcome.hallucination_detected
    assert outcome.per_concept[0].verdict is None
    assert outcome.per_concept[0].question.question == "Where was he born?"


def test_validated_count_is_first_failure_plus_one():
    concepts = ["Reynolds", "London", "1820"]
    for verdicts in itertools.product(["Yes", "No"], repeat=3):
        backend = ScriptedBackend()
        for text, reply in zip(concepts, verdicts):
            script_concept(backend, text, f"Is {text} right?", reply)
        outcome = validate_sentence(
            SENTENCE,
            TOPIC,
            [score(text, 0.1 * (i + 1)) for i, text in enumerate(concepts)],
            LOCAL,
            DetectionPolicy(),
            backend=backend,
            sources=CORPUS,
        )
        expected = verdicts.index("No") + 1 if "No" in verdicts else len(concepts)
        assert len(outcome.per_concept) == expected
        assert outcome.hallucination_detected is ("No" in verdicts)


def test_permuting_concepts_keeps_the_detection():
    verdicts = {"Reynolds": "Yes", "London": "No", "1820": "Yes"}
    for order in itertools.permutations(verdicts):
        backend = ScriptedBackend()
        for text in order:
            script_concept(backend, text, f"Is {text} right?", verdicts[text])
        outcome = validate_sentence(
            SENTENCE, TOPIC, [score(text, 0.3) for text in order], LOCAL, DetectionPolicy(), backend=backend, sources=CORPUS
        )
        assert outcome.hallucination_detected
        assert outcome.failing_concept.text == "London"


def test_outcome_consistency_is_checked():
    with pytest.raises(ValueError):
        ValidationOutcome(hallucination_detected=True)
