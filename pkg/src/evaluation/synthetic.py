"""
Seeded generators of annotated sentences with a known relation between token
probabilities and hallucination, for checking the analyses without a live model.
"""

import numpy as np

from common.labels import Label
from evaluation.model import AnnotationRecord, ConceptLabel

CONCEPT_TOKENS = 3
NOISE_TOKENS = 15


def uniform(rng: np.random.Generator, low: float, high: float, size: int) -> tuple[float, ...]:
    return tuple(float(p) for p in rng.uniform(low, high, size))


def concept_signal_annotations(
    rng: np.random.Generator,
    sentences: int = 200,
    hallucination_rate: float = 0.4,
    topic: str = "synthetic",
) -> list[AnnotationRecord]:
    """
    Sentences whose concept tokens carry the hallucination signal while the other tokens are noise.

    Every sentence has two concepts of three tokens. A hallucinated sentence has
    one hallucinated concept with token probabilities in U(0.05, 0.6); correct
    concepts draw from U(0.4, 1.0). Fifteen further tokens draw from U(0, 1).

    :param rng: The random generator.
    :param sentences: The number of sentences.
    :param hallucination_rate: The probability of a sentence being hallucinated.
    :param topic: The topic of every record.
    :return: The records, with concept and sentence token probabilities.
    """
    records = []
    for index in range(sentences):
        hallucinated = bool(rng.random() < hallucination_rate)
        first = ConceptLabel(
            concept_text="first concept",
            label=Label.from_bool(hallucinated),
            token_probs=uniform(rng, 0.05, 0.6, CONCEPT_TOKENS)
            if hallucinated
            else uniform(rng, 0.4, 1.0, CONCEPT_TOKENS),
        )
        second = ConceptLabel(
            concept_text="second concept",
            label=Label.NOT_HALLUCINATED,
            token_probs=uniform(rng, 0.4, 1.0, CONCEPT_TOKENS),
        )
        noise = uniform(rng, 0.0, 1.0, NOISE_TOKENS)
        records.append(
            AnnotationRecord(
                topic=topic,
                sentence_index=index,
                sentence=f"Synthetic sentence {index}.",
                sentence_label=Label.from_bool(hallucinated),
                concept_labels=(first, second),
                token_probs=first.token_probs + second.token_probs + noise,
            )
        )
    return records


def linear_trend_annotations(
    rng: np.random.Generator, concepts: int = 20000, topic: str = "synthetic"
) -> list[AnnotationRecord]:
    """
    One single-token concept per sentence with score s ~ U(0, 1), hallucinated with probability 1 - s.

    :param rng: The random generator.
    :param concepts: The number of sentences (and concepts).
    :param topic: The topic of every record.
    :return: The records.
    """
    scores = rng.uniform(0.0, 1.0, concepts)
    hallucinated = rng.random(concepts) < 1.0 - scores
    return [
        AnnotationRecord(
            topic=topic,
            sentence_index=index,
            sentence=f"Synthetic sentence {index}.",
            sentence_label=Label.from_bool(bool(h)),
            concept_labels=(
                ConceptLabel(concept_text="concept", label=Label.from_bool(bool(h)), token_probs=(float(s),)),
            ),
            token_probs=(float(s),),
        )
        for index, (s, h) in enumerate(zip(scores, hallucinated))
    ]
