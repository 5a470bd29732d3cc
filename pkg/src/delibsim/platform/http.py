"""HTTP client for an external deliberation platform.

Wire format (JSON, UTF-8):

    POST {posts_path}                 body: Post fields minus post_id
                                      201 -> {"post_id": int}
    POST {votes_path}                 body: {"voter", "direction", "timestamp"}
                                      201 -> {"status": "ok", ...}
                                      409 duplicate vote, 404 unknown target
    GET  {posts_path}?scope=full      200 -> {"posts": [Post, ...]}
    GET  {posts_path}?scope=recent&k=K

Validation failures answer 422 with {"error": message}.
"""

from __future__ import annotations

import logging

import requests

from ..core import HistoryScope, Post, VoteDirection
from .errors import (
    DuplicateVoteError,
    PlatformTransportError,
    PlatformValidationError,
    PublishError,
)

log = logging.getLogger(__name__)


class HttpPlatform:
    kind = "HttpRemote"

    def __init__(
        self,
        base_url: str,
        *,
        posts_path: str = "/posts",
        votes_path: str = "/posts/{id}/votes",
        token: str | None = None,
        timeout: float = 10.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.posts_path = posts_path
        self.votes_path = votes_path
        self.timeout = timeout
        self.session = session or requests.Session()
        if token:
            self.session.headers["Authorization"] = f"Bearer {token}"

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        url = self.base_url + path
        try:
            return self.session.request(method, url, timeout=self.timeout, **kwargs)
        except requests.RequestException as exc:
            raise PlatformTransportError(f"{method} {url} failed: {exc}") from exc

    @staticmethod
    def _error_text(resp: requests.Response) -> str:
        try:
            return resp.json().get("error", resp.text)
        except ValueError:
            return resp.text

    def publish(self, post: Post) -> int:
        payload = post.to_dict()
        payload.pop("post_id")
        resp = self._request("POST", self.posts_path, json=payload)
        if resp.status_code in (400, 404, 422):
            raise PlatformValidationError(self._error_text(resp))
        if not resp.ok:
            raise PublishError(f"publish rejected with HTTP {resp.status_code}", resp.status_code)
        return int(resp.json()["post_id"])

    def vote(self, target: int, direction: VoteDirection, voter: str, timestamp: float = 0.0) -> dict:
        body = {"voter": voter, "direction": VoteDirection(direction).value, "timestamp": timestamp}
        resp = self._request("POST", self.votes_path.format(id=target), json=body)
        if resp.status_code == 409:
            raise DuplicateVoteError(self._error_text(resp))
        if resp.status_code in (400, 404, 422):
            raise PlatformValidationError(self._error_text(resp))
        if not resp.ok:
            raise PublishError(f"vote rejected with HTTP {resp.status_code}", resp.status_code)
        return resp.json()

    def fetch_history(self, scope: HistoryScope | str = HistoryScope.FULL, k: int = 10) -> list[Post]:
        if HistoryScope(scope) is HistoryScope.RECENT_ONLY:
            params = {"scope": "recent", "k": k}
        else:
            params = {"scope": "full"}
        resp = self._request("GET", self.posts_path, params=params)
        if not resp.ok:
            raise PlatformTransportError(f"history fetch failed with HTTP {resp.status_code}")
        return [Post.from_dict(p) for p in resp.json()["posts"]]
