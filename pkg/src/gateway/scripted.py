"""
A deterministic backend replaying completions registered per prompt.

Script file format (JSON)::

    [
        {"prompt": "...", "text": "Hello", "tokens": [["Hello", 1.0]], "finish_reason": "stop"},
        ...
    ]

``tokens`` holds probabilities (not log-probabilities) and may be omitted;
``finish_reason`` defaults to ``stop``.
"""

from collections import defaultdict, deque
from collections.abc import Iterable
import json
import logging
from pathlib import Path
import threading

from pydantic import BaseModel, ConfigDict, ValidationError

from common.errors import ConfigError, ScriptExhausted
from gateway.backend import check_prompt
from gateway.model import Completion, FinishReason, GenerationParams, TokenLogprob

logger = logging.getLogger(__name__)


class ScriptEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    prompt: str
    text: str
    tokens: tuple[TokenLogprob, ...] = ()
    finish_reason: FinishReason = FinishReason.STOP


def script_key(prompt: str) -> str:
    return prompt.rstrip()


class ScriptedBackend:
    """
    Replays completions keyed on the exact prompt (trailing whitespace trimmed).

    Entries sharing a prompt are consumed in registration order.
    """

    def __init__(self, entries: Iterable[ScriptEntry] = ()):
        self._queues: dict[str, deque[ScriptEntry]] = defaultdict(deque)
        self._lock = threading.Lock()
        self.prompts: list[str] = []
        """
        Every prompt received, in order
        """
        for entry in entries:
            self.register(entry)

    @staticmethod
    def from_file(path: Path) -> "ScriptedBackend":
        """
        Load a script file.

        :param path: The path to the JSON script.
        :return: The backend replaying it.
        :raises ConfigError: If the file is not a list of valid entries.
        """
        with open(path, encoding="utf-8") as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as err:
                raise ConfigError(f"Invalid JSON in script {path}: {err}") from err
        if not isinstance(raw, list):
            raise ConfigError(f"Script {path} must contain a JSON array")
        entries = []
        for index, item in enumerate(raw):
            try:
                entries.append(ScriptEntry.model_validate(item))
            except ValidationError as err:
                raise ConfigError(f"Invalid script entry #{index} in {path}: {err}") from err
        logger.debug("loaded %d script entries from %s", len(entries), path)
        return ScriptedBackend(entries)

    def register(self, entry: ScriptEntry) -> None:
        with self._lock:
            self._queues[script_key(entry.prompt)].append(entry)

    def add(
        self,
        prompt: str,
        text: str,
        tokens: Iterable[tuple[str, float]] = (),
        finish_reason: FinishReason = FinishReason.STOP,
    ) -> None:
        """Register a completion for a prompt."""
        self.register(
            ScriptEntry(
                prompt=prompt,
                text=text,
                tokens=tuple(TokenLogprob(t, p) for t, p in tokens),
                finish_reason=finish_reason,
            )
        )

    def remaining(self) -> int:
        with self._lock:
            return sum(len(queue) for queue in self._queues.values())

    def complete(self, prompt: str, params: GenerationParams) -> Completion:
        check_prompt(prompt)
        key = script_key(prompt)
        with self._lock:
            self.prompts.append(prompt)
            queue = self._queues.get(key)
            if not queue:
                raise ScriptExhausted(f"No scripted completion for prompt: {key[-200:]!r}")
            entry = queue.popleft()

        return Completion(
            text=entry.text,
            tokens=entry.tokens if params.logprobs_requested else (),
            finish_reason=entry.finish_reason,
        )
