import enum
import math
from typing import NamedTuple, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FinishReason(enum.StrEnum):
    """Why the backend stopped producing tokens."""

    STOP = "stop"
    """A natural stop or a stop sequence"""

    LENGTH = "length"
    """max_tokens was reached"""

    BACKEND_END = "backend_end"
    """Anything else reported by the backend"""


class GenerationParams(BaseModel):
    """
    Decoding configuration of a completion request.

    Configuration files spell ``stop_sequences`` as ``stop`` and
    ``logprobs_requested`` as ``logprobs``; both spellings are accepted.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", validate_by_name=True, validate_by_alias=True)

    max_tokens: int = Field(default=64, ge=1)
    temperature: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    stop_sequences: tuple[str, ...] = Field(default=(), alias="stop")
    logprobs_requested: bool = Field(default=True, alias="logprobs")

    @field_validator("stop_sequences", mode="before")
    @classmethod
    def split_stop_sequences(cls, value):
        # config files spell the list as "a,b"
        if isinstance(value, str):
            return tuple(part for part in value.split(",") if part)
        return value


class TokenLogprob(NamedTuple):
    token_text: str
    probability: float
    """
    The maximum softmax probability of the token position, in [0, 1]
    """

    @staticmethod
    def from_logprob(token_text: str, logprob: float) -> "TokenLogprob":
        """
        Convert a backend log-probability into a probability.

        :param token_text: The text of the token.
        :param logprob: The natural-log probability reported by the backend.
        :return: The token with ``exp(logprob)`` clipped into [0, 1].
        """
        if math.isnan(logprob):
            raise ValueError(f"Log-probability of token {token_text!r} is NaN")
        return TokenLogprob(token_text, float(np.exp(min(logprob, 0.0))))

    @staticmethod
    def from_logits(token_text: str, logits: list[float]) -> "TokenLogprob":
        """
        Take the maximum softmax probability over the logits of one token position.

        :param token_text: The text of the chosen token.
        :param logits: The raw logits of the position.
        :return: The token with its maximum softmax probability.
        """
        values = np.asarray(logits, dtype=np.float64)
        if values.size == 0:
            raise ValueError(f"No logits for token {token_text!r}")
        shifted = np.exp(values - values.max())
        return TokenLogprob(token_text, float(shifted.max() / shifted.sum()))


class Completion(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    tokens: tuple[TokenLogprob, ...] = ()
    finish_reason: FinishReason = FinishReason.STOP

    @model_validator(mode="after")
    def check_tokens(self) -> Self:
        for token in self.tokens:
            if not token.token_text:
                raise ValueError("Token text must be non-empty")
            if not (0.0 <= token.probability <= 1.0):
                raise ValueError(
                    f"Probability {token.probability} of token {token.token_text!r} is outside [0, 1]"
                )
        if self.tokens and "".join(t.token_text for t in self.tokens) != self.text:
            raise ValueError("Concatenated token texts do not match the completion text")
        return self

    def token_offsets(self) -> list[tuple[int, int]]:
        """
        :return: The half-open character interval of every token within ``text``.
        """
        offsets = []
        start = 0
        for token in self.tokens:
            end = start + len(token.token_text)
            offsets.append((start, end))
            start = end
        return offsets
