"""The tool suite actors use to act on the platform and reach external evidence."""

from __future__ import annotations

import json
import logging
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import requests

from ..core import HistoryScope, Post, VoteDirection
from .errors import PlatformValidationError, ToolAuthorizationError

log = logging.getLogger(__name__)

MAX_SEARCH_RESULTS = 5


class ToolId(str, Enum):
    PUBLISH_POST = "PublishPost"
    FETCH_HISTORY = "FetchHistory"
    VOTE = "Vote"
    WEB_SEARCH = "WebSearch"


# every actor may publish, read and vote; only WebSearch is provisioned per actor
BASE_TOOLS = (ToolId.PUBLISH_POST, ToolId.FETCH_HISTORY, ToolId.VOTE)


class SearchResult(NamedTuple):
    title: str
    snippet: str
    url: str


class FixtureSearch:
    """Deterministic search over a JSON file mapping query substrings to result lists."""

    def __init__(self, corpus: dict[str, list[dict]] | None = None, path: str | Path | None = None):
        if corpus is None:
            if path is None:
                text = resources.files("delibsim.data").joinpath("search_fixture.json").read_text("utf-8")
            else:
                text = Path(path).read_text(encoding="utf-8")
            corpus = json.loads(text)
        self.corpus = {key.lower(): [SearchResult(**r) for r in rows] for key, rows in corpus.items()}

    def search(self, query: str) -> list[SearchResult]:
        q = query.lower()
        results: list[SearchResult] = []
        for key, rows in self.corpus.items():
            if key in q:
                results.extend(r for r in rows if r not in results)
        return results[:MAX_SEARCH_RESULTS]


class HttpSearch:
    """Live search over an endpoint answering ``GET url?q=...`` with a JSON result list."""

    def __init__(self, url: str, timeout: float = 10.0, session: requests.Session | None = None):
        self.url = url
        self.timeout = timeout
        self.session = session or requests.Session()

    def search(self, query: str) -> list[SearchResult]:
        try:
            resp = self.session.get(self.url, params={"q": query}, timeout=self.timeout)
            resp.raise_for_status()
            rows = resp.json()
            if isinstance(rows, dict):
                rows = rows.get("results", [])
            return [SearchResult(r["title"], r.get("snippet", ""), r.get("url", "")) for r in rows][:MAX_SEARCH_RESULTS]
        except (requests.RequestException, ValueError, KeyError, TypeError) as exc:
            log.warning("web search failed for %r, continuing without evidence: %s", query, exc)
            return []


class ToolSuite:
    """One actor's view of the tools, bound to the run's platform adapter."""

    def __init__(self, platform, actor_id: str, provisioned=(), search=None):
        self.platform = platform
        self.actor_id = actor_id
        self.provisioned = frozenset(ToolId(t) for t in (*BASE_TOOLS, *provisioned))
        self.search_provider = search if search is not None else FixtureSearch()

    def has(self, tool: ToolId | str) -> bool:
        return ToolId(tool) in self.provisioned

    def _require(self, tool: ToolId) -> None:
        if tool not in self.provisioned:
            raise ToolAuthorizationError(f"{self.actor_id} is not provisioned with {tool.value}")

    def publish(self, post: Post) -> int:
        self._require(ToolId.PUBLISH_POST)
        return self.platform.publish(post)

    def vote(self, target: int, direction: VoteDirection, timestamp: float = 0.0) -> dict:
        self._require(ToolId.VOTE)
        return self.platform.vote(target, direction, self.actor_id, timestamp)

    def fetch_history(self, scope=HistoryScope.FULL, k: int = 10) -> list[Post]:
        self._require(ToolId.FETCH_HISTORY)
        return self.platform.fetch_history(scope, k)

    def web_search(self, query: str) -> list[SearchResult]:
        self._require(ToolId.WEB_SEARCH)
        if not query or not query.strip():
            raise PlatformValidationError("web search query must be non-empty")
        return self.search_provider.search(query)[:MAX_SEARCH_RESULTS]
