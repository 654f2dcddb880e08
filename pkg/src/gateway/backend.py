import logging
from typing import NamedTuple, Protocol

from pydantic import BaseModel, ConfigDict

from gateway.model import Completion, GenerationParams

logger = logging.getLogger(__name__)


class CompletionBackend(Protocol):
    """
    A text-completion backend.

    Implementations are immutable after construction (apart from internal,
    lock-protected cursors) and may be shared by concurrent pipeline runs.
    """

    def complete(self, prompt: str, params: GenerationParams) -> Completion:
        """
        Complete a prompt.

        :param prompt: The non-empty prompt.
        :param params: The decoding configuration.
        :return: The completion; with token probabilities when ``params.logprobs_requested``.
        :raises BackendUnreachable: On network or authentication failures.
        :raises MalformedResponse: If requested token probabilities are missing.
        :raises ScriptExhausted: If a scripted backend has no entry for the prompt.
        """
        ...


class BackendCall(BaseModel):
    """One prompt sent to a backend and the text it returned."""

    model_config = ConfigDict(frozen=True)

    prompt: str
    reply: str


class RecordingBackend(NamedTuple):
    """
    Wraps a backend and records every call made through it.

    A pipeline run creates one per sentence so that every backend call
    lands in exactly one sentence trace.
    """

    inner: CompletionBackend
    calls: list[BackendCall]

    @staticmethod
    def wrap(inner: CompletionBackend) -> "RecordingBackend":
        return RecordingBackend(inner, [])

    def complete(self, prompt: str, params: GenerationParams) -> Completion:
        completion = self.inner.complete(prompt, params)
        logger.debug("backend call #%d: %r -> %r", len(self.calls), prompt[-80:], completion.text)
        self.calls.append(BackendCall(prompt=prompt, reply=completion.text))
        return completion


def check_prompt(prompt: str) -> None:
    if not prompt.strip():
        raise ValueError("Prompt must be non-empty")
