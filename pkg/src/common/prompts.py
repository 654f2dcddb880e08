"""
Instructional prompt templates and the builders assembling full prompts from them.

Blocks of a prompt (context, sentence, instruction, question) are separated by
a blank line. Evidence snippets are joined with a blank line as well.
"""

from collections.abc import Iterable, Sequence

TOPIC_TEMPLATE = "Write an article about {topic}"

KEYPHRASE_INSTRUCTION = (
    "Identify all the important keyphrases from the above sentence and return a comma separated list."
)

YES_NO_QUESTION_TEMPLATE = (
    "For the above sentence about {topic}, generate a yes/no question that tests the correctness of {concept}."
)

WH_QUESTION_TEMPLATE = (
    "For the above sentence about {topic}, generate a question whose answer is {concept}."
)

ANSWER_TEMPLATE = "Answer the below question about {topic} in Yes or No based on the above context."

REPAIR_INSTRUCTION = (
    "The above sentence has information that can not be verified from the provided evidence, "
    "repair that incorrect information and create a new sentence based on the provided evidence."
)

PREMISE_CHECK_TEMPLATE = (
    "Context: {search_results}\n"
    "Question: {question}\n"
    "Based on the above context, does the above question make factually correct assumptions?"
)

RECTIFY_TEMPLATE = (
    "Context: {step_one_reply}\n"
    "Question: {question}\n"
    "Rectify the incorrect information in the given question based on the context."
)

CONTEXT_ANSWER_TEMPLATE = "Context: {search_results}\nQuestion: {question}\nAnswer:"

BLOCK_SEPARATOR = "\n\n"


def join_blocks(*blocks: str) -> str:
    return BLOCK_SEPARATOR.join(block for block in blocks if block)


def join_evidence(texts: Iterable[str]) -> str:
    return BLOCK_SEPARATOR.join(texts)


def continuation_prompt(
    preamble: str, accepted: Sequence[str], separator: str = BLOCK_SEPARATOR
) -> str:
    """
    Build the prompt generating the next sentence.

    :param preamble: The task prompt (topic prompt or few-shot question prompt).
    :param accepted: The sentences accepted so far, in order.
    :param separator: What goes between the preamble and the accepted sentences.
    :return: The preamble followed by the accepted sentences joined with single spaces.
    """
    if not accepted:
        return preamble
    return preamble + separator + " ".join(accepted)


def article_preamble(topic: str) -> str:
    return TOPIC_TEMPLATE.format(topic=topic)


def keyphrase_prompt(preamble: str, accepted: Sequence[str], sentence: str) -> str:
    return join_blocks(preamble, " ".join([*accepted, sentence]), KEYPHRASE_INSTRUCTION)


def question_prompt(sentence: str, topic: str, concept: str, wh: bool = False) -> str:
    template = WH_QUESTION_TEMPLATE if wh else YES_NO_QUESTION_TEMPLATE
    return join_blocks(sentence, template.format(topic=topic, concept=concept))


def answer_prompt(evidence: Iterable[str], topic: str, question: str) -> str:
    return join_blocks(join_evidence(evidence), ANSWER_TEMPLATE.format(topic=topic), question)


def repair_prompt(evidence: Iterable[str], sentence: str) -> str:
    return join_blocks(join_evidence(evidence), sentence, REPAIR_INSTRUCTION)


def premise_check_prompt(evidence: Iterable[str], question: str) -> str:
    return PREMISE_CHECK_TEMPLATE.format(search_results=join_evidence(evidence), question=question)


def rectify_prompt(step_one_reply: str, question: str) -> str:
    return RECTIFY_TEMPLATE.format(step_one_reply=step_one_reply, question=question)


def context_answer_prompt(evidence: Iterable[str], question: str) -> str:
    return CONTEXT_ANSWER_TEMPLATE.format(search_results=join_evidence(evidence), question=question)
