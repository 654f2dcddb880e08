"""
Client of a web search API returning a JSON list of results with snippet and URL fields.

The defaults target the Bing Web Search API; any API with the same shape works by
changing the endpoint, parameter names and the dotted path to the result list.
"""

import logging
import os
from typing import Any, NamedTuple

from pydantic import BaseModel, ConfigDict, Field
import requests

from common.errors import SearchUnreachable
from common.labels import RetrievalMode
from retrieval.model import Evidence

logger = logging.getLogger(__name__)

API_KEY_ENV = "HALO_SEARCH_API_KEY"


class SearchConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    endpoint: str = "https://api.bing.microsoft.com/v7.0/search"
    query_param: str = "q"
    count_param: str = "count"
    results_path: str = "webPages.value"
    snippet_field: str = "snippet"
    url_field: str = "url"
    api_key_header: str = "Ocp-Apim-Subscription-Key"
    timeout: float = Field(default=15.0, gt=0)


class WebSearchClient(NamedTuple):
    config: SearchConfig
    api_key: str | None

    @staticmethod
    def from_env(config: SearchConfig) -> "WebSearchClient":
        """Create a client reading the API key from ``HALO_SEARCH_API_KEY``."""
        return WebSearchClient(config, os.environ.get(API_KEY_ENV))

    def search(self, query: str, count: int) -> list[Evidence]:
        """
        Issue one search request.

        :param query: The query string.
        :param count: The number of results to ask for.
        :return: The results with a non-empty snippet, in API order.
        :raises SearchUnreachable: On network or authentication failures.
        """
        if not self.api_key:
            raise SearchUnreachable(f"{API_KEY_ENV} is not set")
        cfg = self.config
        try:
            response = requests.get(
                cfg.endpoint,
                params={cfg.query_param: query, cfg.count_param: count},
                headers={cfg.api_key_header: self.api_key},
                timeout=cfg.timeout,
            )
            response.raise_for_status()
            body = response.json()
        except requests.RequestException as err:
            raise SearchUnreachable(f"Search request failed: {err}") from err

        return parse_results(body, cfg)


def parse_results(body: Any, config: SearchConfig) -> list[Evidence]:
    """
    Map a search response body to evidence.

    :param body: The decoded JSON body.
    :param config: Field paths of the API.
    :return: The evidence; empty when the result list is missing.
    """
    results = body
    for key in config.results_path.split("."):
        if not isinstance(results, dict) or key not in results:
            logger.warning("search response has no %r results", config.results_path)
            return []
        results = results[key]

    if not isinstance(results, list):
        return []

    evidence = []
    for item in results:
        if not isinstance(item, dict):
            continue
        snippet = str(item.get(config.snippet_field) or "").strip()
        if snippet:
            evidence.append(
                Evidence(
                    text=snippet,
                    source=RetrievalMode.WEB_SEARCH,
                    locator=str(item.get(config.url_field) or ""),
                )
            )
    return evidence
