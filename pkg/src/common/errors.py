"""
Exception hierarchy for the halo pipeline.

Errors raised for bad inputs also derive from ``ValueError`` so callers that
only care about "invalid value" can keep catching that.
"""

from typing import Any


class HaloError(Exception):
    """Base class of every error raised by the halo packages."""

    partial_report: Any = None
    """
    The partially built report of the run that failed, attached by the pipeline
    before the error is re-raised.
    """


# backend


class BackendUnreachable(HaloError):
    """The completion backend could not be reached or rejected the credentials."""


class MalformedResponse(HaloError):
    """The completion backend answered with a body we cannot interpret."""


class ScriptExhausted(HaloError):
    """The scripted backend has no (remaining) entry for a prompt."""


# retrieval


class SearchUnreachable(HaloError):
    """The web search API could not be reached or rejected the credentials."""


# signals, recovered from by the caller


class EmptyExtraction(HaloError):
    """No concept was found in a sentence."""


class EmptyQuestion(HaloError):
    """The backend returned a blank validation question."""


class EmptyRepair(HaloError):
    """The backend returned a blank repaired sentence."""


class EmptyRectification(HaloError):
    """The backend returned a blank rectified question."""


# value errors


class EmptyTokenList(HaloError, ValueError):
    """A probability score was requested over zero tokens."""


class EvaluationError(HaloError, ValueError):
    """Base class of evaluation input errors."""


class LengthMismatch(EvaluationError):
    pass


class EmptyInput(EvaluationError):
    pass


class EmptyCurve(EvaluationError):
    pass


class MissingIndex(EvaluationError):
    pass


class NoScoredConcepts(EvaluationError):
    pass


class ConfigError(HaloError, ValueError):
    """A configuration or input file could not be parsed."""


class UsageError(HaloError):
    """The command line could not be parsed."""
