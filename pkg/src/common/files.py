"""
Readers and writers for the plain-text and JSON Lines files the tools consume and produce.
"""

from collections.abc import Iterable, Iterator
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from common.errors import ConfigError


def tokenize(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    """
    Strip the input lines and drop empty lines and comments.

    :param lines: The input lines.
    :return: An iterable of (line number, stripped line) pairs.
    """
    for line_number, line in enumerate(lines, start=1):
        # Skip empty lines and comments
        if not line.strip() or line.lstrip().startswith("#"):
            continue

        yield line_number, line.strip()


def read_items(path: Path) -> list[str]:
    """
    Read a one-item-per-line file (topics, questions).

    :param path: The path to the UTF-8 text file.
    :return: The items in file order.
    """
    with open(path, encoding="utf-8") as f:
        return [line for _, line in tokenize(f)]


def iter_jsonl(path: Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """
    Iterate over the records of a JSON Lines file.

    :param path: The path to the file.
    :return: An iterable of (line number, decoded object) pairs.
    :raises ConfigError: If a line is not a JSON object.
    """
    with open(path, encoding="utf-8") as f:
        for line_number, line in tokenize(f):
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise ConfigError(f"Invalid JSON in {path} at line {line_number}: {err}") from err
            if not isinstance(record, dict):
                raise ConfigError(f"Expected a JSON object in {path} at line {line_number}")
            yield line_number, record


def load_jsonl[M: BaseModel](path: Path, model: type[M]) -> list[M]:
    """
    Load and validate every record of a JSON Lines file.

    :param path: The path to the file.
    :param model: The pydantic model of one record.
    :return: The validated records.
    :raises ConfigError: If a record does not match the model.
    """
    records = []
    for line_number, raw in iter_jsonl(path):
        try:
            records.append(model.model_validate(raw))
        except ValueError as err:
            raise ConfigError(f"Invalid record in {path} at line {line_number}: {err}") from err
    return records


def write_json(path: Path, payload: BaseModel | Any) -> Path:
    """
    Write a model (or plain JSON data) to disk with a stable layout.

    :param path: The destination file; parent directories are created.
    :param payload: A pydantic model or JSON-serializable data.
    :return: The path written.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")
    return path


def write_jsonl(path: Path, records: Iterable[BaseModel]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json())
            f.write("\n")
    return path
