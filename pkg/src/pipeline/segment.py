"""
Cuts a generated continuation down to its first complete sentence.
"""

import re

# lower-cased, with their final period
ABBREVIATIONS = frozenset(
    """
    mr. mrs. ms. dr. prof. sr. jr. st. mt. ft. vs. e.g. i.e. inc. ltd. co. corp. vol.
    jan. feb. mar. apr. jun. jul. aug. sep. sept. oct. nov. dec.
    u.s. u.k. u.n. d.c. ph.d. b.a. m.a. m.d. a.m. p.m.
    gen. col. lt. sgt. capt. gov. sen. rep. rev. approx. dept. univ.
    """.split()
)

INITIALS_PATTERN = re.compile(r"(?:[A-Za-z]\.)+")
TERMINATOR_PATTERN = re.compile(r"[.!?]+[\"'”’)\]]*(?=\s|$)")

NUMBER_SIGN = "no."
FOLLOWING_NUMBER_PATTERN = re.compile(r"\s*\d")


def is_abbreviation(text: str, period: int) -> bool:
    """
    Tell whether the period at ``text[period]`` ends an abbreviation or an initial.

    "No." counts only when a number follows it, as in "No. 5".
    """
    word_start = period
    while word_start > 0 and not text[word_start - 1].isspace():
        word_start -= 1
    word = text[word_start : period + 1].lstrip("\"'“‘([").casefold()
    if word == NUMBER_SIGN:
        return FOLLOWING_NUMBER_PATTERN.match(text, period + 1) is not None
    return word in ABBREVIATIONS or INITIALS_PATTERN.fullmatch(word) is not None


def segment_first_sentence(text: str) -> tuple[str, bool]:
    """
    Extract the first sentence of a continuation.

    A sentence ends at the first ``.``, ``!`` or ``?`` (optionally followed by
    closing quotes or brackets) that is followed by whitespace or the end of the
    text, unless the period closes a known abbreviation or an initial. Periods
    inside numbers ("3.5") are never followed by whitespace and so never end one.

    :param text: The generated continuation.
    :return: The sentence and True, or the whole stripped text and False if no
        sentence boundary was found.
    """
    text = text.lstrip()
    for match in TERMINATOR_PATTERN.finditer(text):
        marks = match.group().rstrip("\"'”’)]")
        if marks == "." and is_abbreviation(text, match.start()):
            continue
        return text[: match.end()], True
    return text.strip(), False
