"""
Client of an HTTP completion endpoint in the style of the legacy ``/completions`` API.

Request::

    POST {base_url}/completions
    {"model": ..., "prompt": ..., "max_tokens": ..., "temperature": ..., "logprobs": 1, "stop": [...]}

Response (first choice is used)::

    {"choices": [{"text": ..., "finish_reason": "stop" | "length" | ...,
                  "logprobs": {"tokens": [...], "token_logprobs": [...],
                               "token_logits": [[...], ...]}}]}

Partial characters arrive as ``"bytes:\\xNN..."`` tokens and are merged into whole characters.

``token_logits`` is optional; when present it takes precedence and the
probability of a position is its maximum softmax probability.
"""

import logging
import os
import re
from collections.abc import Iterable
from typing import Any, NamedTuple

import requests

from common.errors import BackendUnreachable, MalformedResponse
from gateway.backend import check_prompt
from gateway.model import Completion, FinishReason, GenerationParams, TokenLogprob

logger = logging.getLogger(__name__)

API_KEY_ENV = "HALO_LLM_API_KEY"

BYTES_PREFIX = "bytes:"
BYTE_ESCAPE_PATTERN = re.compile(r"\\x([0-9a-fA-F]{2})")
BYTE_ESCAPES_PATTERN = re.compile(r"(?:\\x[0-9a-fA-F]{2})+")


class HttpBackend(NamedTuple):
    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 30.0

    @staticmethod
    def from_env(base_url: str, model: str, timeout: float = 30.0) -> "HttpBackend":
        """Create a client reading the API key from ``HALO_LLM_API_KEY``."""
        return HttpBackend(base_url, model, os.environ.get(API_KEY_ENV), timeout)

    def complete(self, prompt: str, params: GenerationParams) -> Completion:
        check_prompt(prompt)
        if not self.api_key:
            raise BackendUnreachable(f"{API_KEY_ENV} is not set")

        payload: dict[str, Any] = {
            "model": self.model,
            "prompt": prompt,
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
        }
        if params.logprobs_requested:
            payload["logprobs"] = 1
        if params.stop_sequences:
            payload["stop"] = list(params.stop_sequences)

        try:
            response = requests.post(
                f"{self.base_url.rstrip('/')}/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            body = response.json()
        except requests.exceptions.JSONDecodeError as err:
            raise MalformedResponse(f"Completion response is not JSON: {err}") from err
        except requests.RequestException as err:
            raise BackendUnreachable(f"Completion request failed: {err}") from err

        return parse_completion(body, params.logprobs_requested)


def parse_completion(body: dict[str, Any], logprobs_requested: bool) -> Completion:
    """
    Convert a completion response body into a Completion.

    :param body: The decoded JSON body.
    :param logprobs_requested: Whether token probabilities must be present.
    :return: The completion.
    :raises MalformedResponse: If required fields are missing or inconsistent.
    """
    try:
        choice = body["choices"][0]
        text = choice["text"]
    except (KeyError, IndexError, TypeError) as err:
        raise MalformedResponse(f"Completion response has no choice text: {err!r}") from err

    match choice.get("finish_reason"):
        case "stop":
            finish_reason = FinishReason.STOP
        case "length":
            finish_reason = FinishReason.LENGTH
        case _:
            finish_reason = FinishReason.BACKEND_END

    if not logprobs_requested:
        return Completion(text=text, finish_reason=finish_reason)

    try:
        tokens = parse_tokens(choice["logprobs"])
        return Completion(text=text, tokens=tokens, finish_reason=finish_reason)
    except (KeyError, TypeError, ValueError) as err:
        raise MalformedResponse(f"Completion response has unusable logprobs: {err!r}") from err


def parse_tokens(logprobs: dict[str, Any]) -> tuple[TokenLogprob, ...]:
    texts: list[str] = logprobs["tokens"]
    logits = logprobs.get("token_logits")
    if logits is not None:
        values = logits
        convert = TokenLogprob.from_logits
    else:
        values = logprobs["token_logprobs"]
        convert = TokenLogprob.from_logprob

    if len(values) != len(texts):
        raise ValueError(f"{len(texts)} tokens but {len(values)} probability entries")

    return merge_byte_tokens(convert(token, value) for token, value in zip(texts, values))


def token_bytes(token_text: str) -> bytes:
    """
    :return: The raw bytes of a token, decoding the ``bytes:\\xNN...`` spelling of partial characters.
    """
    if not token_text.startswith(BYTES_PREFIX):
        return token_text.encode("utf-8")
    escapes = token_text.removeprefix(BYTES_PREFIX)
    if not BYTE_ESCAPES_PATTERN.fullmatch(escapes):
        raise ValueError(f"Unreadable byte token {token_text!r}")
    return bytes(int(digits, 16) for digits in BYTE_ESCAPE_PATTERN.findall(escapes))


def merge_byte_tokens(tokens: Iterable[TokenLogprob]) -> tuple[TokenLogprob, ...]:
    """
    Join byte fragments of a split multi-byte character into one token.

    The merged token takes the lowest probability of its fragments.
    Zero-length tokens carry no text to align and are dropped.
    """
    merged: list[TokenLogprob] = []
    pending = b""
    pending_probs: list[float] = []
    for token in tokens:
        if not pending and not token.token_text.startswith(BYTES_PREFIX):
            if token.token_text:
                merged.append(token)
            continue
        pending += token_bytes(token.token_text)
        pending_probs.append(token.probability)
        try:
            text = pending.decode("utf-8")
        except UnicodeDecodeError:
            continue
        if text:
            merged.append(TokenLogprob(text, min(pending_probs)))
        pending, pending_probs = b"", []

    if pending:
        # a completion cut off inside a character; the backend text carries a replacement mark
        merged.append(TokenLogprob(pending.decode("utf-8", errors="replace"), min(pending_probs)))
    return tuple(merged)
