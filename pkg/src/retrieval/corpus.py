"""
A local document collection ranked by word overlap with the query.
"""

import logging
from pathlib import Path
import re
from typing import NamedTuple

from common.errors import ConfigError
from common.files import iter_jsonl
from common.labels import RetrievalMode
from retrieval.model import Evidence

logger = logging.getLogger(__name__)


class Document(NamedTuple):
    id: str
    text: str


def words(text: str) -> set[str]:
    return set(re.findall(r"\w+", text.casefold()))


class LocalCorpus(NamedTuple):
    documents: tuple[Document, ...]

    @staticmethod
    def from_path(path: Path) -> "LocalCorpus":
        """
        Load a corpus.

        :param path: A directory of UTF-8 ``.txt`` files (the id is the relative path)
            or a JSONL file of ``{"id": ..., "text": ...}`` records.
        :return: The corpus.
        :raises ConfigError: If the path is neither, or a record is invalid.
        """
        if path.is_dir():
            documents = [
                Document(file.relative_to(path).as_posix(), file.read_text(encoding="utf-8"))
                for file in sorted(path.rglob("*.txt"))
            ]
        elif path.is_file():
            documents = []
            for line_number, record in iter_jsonl(path):
                match record:
                    case {"id": str(doc_id), "text": str(text)}:
                        documents.append(Document(doc_id, text))
                    case _:
                        raise ConfigError(
                            f"Corpus record needs string id and text in {path} at line {line_number}"
                        )
        else:
            raise ConfigError(f"Corpus not found: {path}")

        logger.info("loaded %d corpus documents from %s", len(documents), path)
        return LocalCorpus(tuple(documents))

    def rank(self, query: str, top_k: int) -> list[Evidence]:
        """
        Rank documents by the number of distinct case-folded words shared with the query.

        :param query: The query string.
        :param top_k: The maximum number of results.
        :return: Documents sharing at least one word, best first; ties broken by id.
        """
        query_words = words(query)
        scored = [
            (len(query_words & words(doc.text)), doc)
            for doc in self.documents
            if doc.text.strip()
        ]
        ranked = sorted(
            ((overlap, doc) for overlap, doc in scored if overlap > 0),
            key=lambda item: (-item[0], item[1].id),
        )
        return [
            Evidence(text=doc.text.strip(), source=RetrievalMode.LOCAL_CORPUS, locator=doc.id)
            for _, doc in ranked[:top_k]
        ]
