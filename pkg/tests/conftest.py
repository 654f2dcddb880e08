from pathlib import Path

import pytest

from common.labels import RetrievalMode
from gateway.scripted import ScriptedBackend
from retrieval.corpus import Document, LocalCorpus
from retrieval.model import Evidence
from retrieval.retrieve import KnowledgeSources

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def scripted() -> ScriptedBackend:
    return ScriptedBackend()


@pytest.fixture
def mahler_corpus() -> LocalCorpus:
    return LocalCorpus(
        (
            Document("braves", "The Atlanta Braves are a baseball team based in Atlanta, Georgia."),
            Document(
                "mahler",
                "Rick Mahler was born in Austin, Texas on August 5, 1953. He pitched for the Atlanta Braves.",
            ),
        )
    )


@pytest.fixture
def corpus_sources(mahler_corpus) -> KnowledgeSources:
    return KnowledgeSources(corpus=mahler_corpus)


@pytest.fixture
def article_fixture() -> Path:
    return FIXTURES / "article_basic"


def evidence(text: str, locator: str = "doc") -> Evidence:
    return Evidence(text=text, source=RetrievalMode.LOCAL_CORPUS, locator=locator)
