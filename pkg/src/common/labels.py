import enum


class Label(enum.StrEnum):
    """Gold or predicted correctness of a sentence or a concept."""

    HALLUCINATED = "hallucinated"
    NOT_HALLUCINATED = "not_hallucinated"

    @property
    def is_hallucinated(self) -> bool:
        return self is Label.HALLUCINATED

    @staticmethod
    def from_bool(hallucinated: bool) -> "Label":
        return Label.HALLUCINATED if hallucinated else Label.NOT_HALLUCINATED


class ConceptSource(enum.StrEnum):
    """How a concept was identified. Also used to select the extraction method."""

    MODEL_INSTRUCTION = "model_instruction"
    """The backend is instructed to list the keyphrases of the sentence"""

    RULE_BASED = "rule_based"
    """Deterministic heuristics over the surface form"""

    EXTERNAL_TOOL = "external_tool"
    """A pluggable entity / keyword tool"""


class ScoreMethod(enum.StrEnum):
    """
    Aggregation of token probabilities into a concept score.
    The values are the config spellings.
    """

    MINIMUM = "min"
    AVERAGE = "avg"
    NORMALIZED_PRODUCT = "norm_prod"


class RetrievalMode(enum.StrEnum):
    """Where evidence for a validation question comes from."""

    WEB_SEARCH = "web_search"
    LOCAL_CORPUS = "local_corpus"
    SELF_INQUIRY = "self_inquiry"


class QuestionType(enum.StrEnum):
    YES_NO = "yes_no"
    WH = "wh"
