import logging
from typing import NamedTuple

from common.labels import RetrievalMode
from gateway.backend import CompletionBackend
from gateway.model import GenerationParams
from retrieval.corpus import LocalCorpus
from retrieval.model import Evidence, RetrievalConfig
from retrieval.web import WebSearchClient

logger = logging.getLogger(__name__)

SELF_INQUIRY_PARAMS = GenerationParams(max_tokens=128, logprobs_requested=False)


class KnowledgeSources(NamedTuple):
    """The retrieval clients available to a run. Any may be missing if its mode is unused."""

    web: WebSearchClient | None = None
    corpus: LocalCorpus | None = None


def retrieve(
    query: str,
    config: RetrievalConfig,
    sources: KnowledgeSources,
    backend: CompletionBackend | None = None,
    params: GenerationParams = SELF_INQUIRY_PARAMS,
) -> list[Evidence]:
    """
    Fetch evidence for a query.

    :param query: The query; the validation question or the user question verbatim.
    :param config: The retrieval configuration.
    :param sources: The web and corpus clients.
    :param backend: The backend answering in self_inquiry mode.
    :param params: Decoding configuration of the self-inquiry call.
    :return: At most ``top_k`` (1 unless ``join_top_k``) evidence items, each
        truncated to ``max_snippet_chars``; empty when nothing was found.
    :raises SearchUnreachable: If the web search fails.
    """
    if not query.strip():
        raise ValueError("Query must be non-empty")

    top_k = config.effective_top_k
    match config.mode:
        case RetrievalMode.WEB_SEARCH:
            if sources.web is None:
                raise ValueError("web_search retrieval requires a search client")
            found = sources.web.search(query, top_k)
        case RetrievalMode.LOCAL_CORPUS:
            if sources.corpus is None:
                raise ValueError("local_corpus retrieval requires a corpus")
            found = sources.corpus.rank(query, top_k)
        case RetrievalMode.SELF_INQUIRY:
            if backend is None:
                raise ValueError("self_inquiry retrieval requires a backend")
            answer = backend.complete(query, params).text.strip()
            found = []
            if answer:
                found.append(Evidence(text=answer, source=RetrievalMode.SELF_INQUIRY, locator="model"))
        case _:
            raise ValueError(f"Unknown retrieval mode: {config.mode}")

    evidence = [
        e.model_copy(update={"text": e.text[: config.max_snippet_chars]}) for e in found[:top_k]
    ]
    if not evidence:
        logger.warning("no evidence found for %r (%s)", query, config.mode)
    return evidence
