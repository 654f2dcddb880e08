from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator

from common.labels import RetrievalMode


class Evidence(BaseModel):
    """A retrieved knowledge snippet with its source."""

    model_config = ConfigDict(frozen=True)

    text: str = Field(min_length=1)
    source: RetrievalMode
    locator: str
    """
    URL, document id, or "model" for self-inquiry
    """


class RetrievalConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: RetrievalMode = RetrievalMode.WEB_SEARCH
    top_k: int = Field(default=3, ge=1)
    max_snippet_chars: int = Field(default=1000, ge=1)
    join_top_k: bool = True
    """
    concatenate the top_k snippets in prompts; when false only the top snippet is used
    """
    corpus: Path | None = None
    """
    directory of text files or JSONL file backing local_corpus mode
    """

    @field_validator("corpus", mode="before")
    @classmethod
    def empty_path_is_none(cls, value):
        return value or None

    @property
    def effective_top_k(self) -> int:
        return self.top_k if self.join_top_k else 1
