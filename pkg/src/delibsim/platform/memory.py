"""In-process deliberation platform."""

from __future__ import annotations

import threading
from collections import defaultdict
from dataclasses import replace

from ..core import HistoryScope, Post, PostKind, SharedHistory, VoteDirection, VoteRecord
from .errors import DuplicateVoteError, PlatformValidationError


class InMemoryPlatform:
    kind = "InMemory"

    def __init__(self):
        self.store = SharedHistory()
        self._next_id = 1
        self._lock = threading.Lock()

    def publish(self, post: Post) -> int:
        with self._lock:
            if post.kind is PostKind.REPLY:
                parent = self.store.get(post.parent)
                if parent is None:
                    raise PlatformValidationError(f"reply parent {post.parent} does not exist")
                if parent.author == post.author:
                    raise PlatformValidationError("replies to one's own post are not allowed")
            post_id = self._next_id
            self.store.add_post(replace(post, post_id=post_id))
            self._next_id += 1
            return post_id

    def vote(self, target: int, direction: VoteDirection, voter: str, timestamp: float = 0.0) -> dict:
        with self._lock:
            post = self.store.get(target)
            if post is None:
                raise PlatformValidationError(f"vote target {target} does not exist")
            if post.author == voter:
                raise PlatformValidationError(f"{voter} cannot vote on own post {target}")
            if self.store.has_voted(voter, target):
                raise DuplicateVoteError(f"{voter} already voted on post {target}")
            self.store.add_vote(VoteRecord(voter, target, VoteDirection(direction), timestamp))
            return {"status": "ok", "target": target, "voter": voter}

    def fetch_history(self, scope: HistoryScope | str = HistoryScope.FULL, k: int = 10) -> list[Post]:
        with self._lock:
            posts = list(self.store.posts)
        if HistoryScope(scope) is HistoryScope.RECENT_ONLY:
            return posts[-k:] if k > 0 else []
        return posts

    def tallies(self) -> dict[int, int]:
        """Net score (ups minus downs) per post."""
        score = defaultdict(int)
        with self._lock:
            for v in self.store.votes:
                score[v.target] += 1 if v.direction is VoteDirection.UP else -1
        return dict(score)
