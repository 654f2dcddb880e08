"""
The run configuration: a flat text file of dotted keys.

Example::

    # run.cfg
    backend.kind = scripted
    backend.script = script.json
    scoring.method = min        # min | avg | norm_prod
    retrieval.mode = local_corpus
    retrieval.corpus = corpus.jsonl

Relative paths are resolved against the directory of the file. Secrets are
never read from the file, only from the environment.
"""

import enum
import hashlib
import json
import logging
from pathlib import Path
import re

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from common.errors import ConfigError
from common.files import tokenize
from common.labels import ConceptSource, QuestionType
from detection.scoring import DetectionPolicy
from gateway.model import GenerationParams
from pipeline.model import PipelineConfig
from retrieval.model import RetrievalConfig
from retrieval.web import SearchConfig

logger = logging.getLogger(__name__)

LINE_PATTERN = re.compile(r"(?P<section>[a-z_]+)\.(?P<key>[a-z_]+)\s*=\s*(?P<value>.*)")


class BackendKind(enum.StrEnum):
    HTTP = "http"
    SCRIPTED = "scripted"


class BackendConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: BackendKind = BackendKind.HTTP
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo-instruct"
    script: Path | None = None
    """
    JSON script replayed when kind is scripted
    """
    timeout: float = Field(default=30.0, gt=0)

    @field_validator("script", mode="before")
    @classmethod
    def empty_path_is_none(cls, value):
        return value or None


class PipelineSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_sentences: int = Field(default=5, ge=1)
    concept_method: ConceptSource = ConceptSource.MODEL_INSTRUCTION
    mitigation: bool = True
    revalidate: bool = False


class MultiHopSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    max_steps: int = Field(default=6, ge=1)
    question_type: QuestionType = QuestionType.YES_NO


class HaloConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    backend: BackendConfig = BackendConfig()
    search: SearchConfig = SearchConfig()
    generation: GenerationParams = GenerationParams()
    scoring: DetectionPolicy = DetectionPolicy()
    retrieval: RetrievalConfig = RetrievalConfig()
    pipeline: PipelineSection = PipelineSection()
    multihop: MultiHopSection = MultiHopSection()

    def pipeline_config(self, multihop: bool = False) -> PipelineConfig:
        """
        :param multihop: Use the multi-hop question type instead of Yes/No questions.
        :return: The pipeline configuration of a run.
        """
        return PipelineConfig(
            num_sentences=self.pipeline.num_sentences,
            params=self.generation,
            policy=self.scoring,
            retrieval=self.retrieval,
            concept_method=self.pipeline.concept_method,
            mitigation_enabled=self.pipeline.mitigation,
            revalidate=self.pipeline.revalidate,
            question_type=self.multihop.question_type if multihop else QuestionType.YES_NO,
            max_steps=self.multihop.max_steps,
        )

    def digest(self) -> str:
        """The SHA-256 of the canonical JSON of the resolved configuration."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def resolve_paths(self, base_dir: Path) -> "HaloConfig":
        """Make the script and corpus paths absolute, relative to ``base_dir``."""
        backend, retrieval = self.backend, self.retrieval
        if backend.script is not None and not backend.script.is_absolute():
            backend = backend.model_copy(update={"script": base_dir / backend.script})
        if retrieval.corpus is not None and not retrieval.corpus.is_absolute():
            retrieval = retrieval.model_copy(update={"corpus": base_dir / retrieval.corpus})
        return self.model_copy(update={"backend": backend, "retrieval": retrieval})


def strip_value(raw: str) -> str:
    # inline comments need whitespace before the '#'
    value = re.split(r"\s#", raw, maxsplit=1)[0].strip()
    if len(value) >= 2 and value[0] == value[-1] == '"':
        value = value[1:-1]
    return value


def parse_config(text: str, source: str = "<config>") -> HaloConfig:
    """
    Parse the text of a configuration file.

    :param text: The file content.
    :param source: The name used in error messages.
    :return: The validated configuration; missing keys take their defaults.
    :raises ConfigError: On a malformed line, a repeated key, an unknown key or an invalid value.
    """
    sections: dict[str, dict[str, str]] = {}
    for line_number, line in tokenize(text.splitlines()):
        match = LINE_PATTERN.fullmatch(line)
        if match is None:
            raise ConfigError(f"Expected 'section.key = value' in {source} at line {line_number}")
        section, key = match["section"], match["key"]
        entries = sections.setdefault(section, {})
        if key in entries:
            raise ConfigError(f"Repeated key {section}.{key} in {source} at line {line_number}")
        entries[key] = strip_value(match["value"])

    try:
        return HaloConfig.model_validate(sections)
    except ValidationError as err:
        raise ConfigError(f"Invalid configuration in {source}: {err}") from err


def load_config(path: Path | None) -> HaloConfig:
    """
    Load a configuration file.

    :param path: The file, or None for the defaults.
    :return: The configuration with relative paths resolved against the file's directory.
    :raises ConfigError: If the file cannot be read or parsed.
    """
    if path is None:
        return HaloConfig()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"Cannot read config {path}: {err}") from err
    config = parse_config(text, str(path)).resolve_paths(path.parent)
    logger.debug("loaded config %s (digest %s)", path, config.digest())
    return config
