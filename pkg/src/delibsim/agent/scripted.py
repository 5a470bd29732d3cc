"""Deterministic rule-based backend used for tests, demos and offline runs."""

from __future__ import annotations

import re
import zlib
from importlib import resources

import yaml

from ..core import Archetype, PostKind, Stance, ToolCall, VoteDirection
from ..platform.tools import ToolId
from .base import AgentBackend, AgentBackendKind, AgentContext, GeneratedContent, PostIntent, VoteDecision

_WORD = re.compile(r"[a-z]+")
_MAX_SEARCH_ROUNDS = 2

_OPENERS = {
    Archetype.CASUAL_USER: "Honestly from my own experience",
    Archetype.EXPERT: "From a methodological standpoint",
    Archetype.ADVOCATE: "Speaking for the communities most exposed",
    Archetype.SKEPTIC: "Looking at the actual numbers",
    Archetype.CUSTOM: "In my view",
}

_FILLER = (
    "we should weigh what this means for ordinary households",
    "the details of funding and timing matter here",
    "local conditions differ so plans need to be flexible",
    "people deserve clear information before the next season",
    "this is worth discussing openly and carefully",
)


def load_affinity(path=None) -> dict[Archetype, frozenset[Archetype]]:
    if path is None:
        text = resources.files("delibsim.data").joinpath("affinity.yaml").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    raw = yaml.safe_load(text) or {}
    return {Archetype(k): frozenset(Archetype(x) for x in (v or [])) for k, v in raw.items()}


def keywords(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if len(w) >= 5}


class ScriptedAgent(AgentBackend):
    """Answers every agent query with fixed rules.

    Vote candidates are the ``m`` newest eligible posts; a candidate is
    upvoted when it shares a keyword (5+ letters) with the persona's core
    beliefs and downvoted otherwise. Replies target the newest eligible post
    and agree iff the author's archetype is in the affinity table entry for
    this persona's archetype. Bodies are persona templates whose word count is
    fixed by a checksum of the context, so equal inputs give equal outputs.
    """

    kind = AgentBackendKind.SCRIPTED

    def __init__(self, affinity: dict[Archetype, frozenset[Archetype]] | None = None):
        self.affinity = affinity if affinity is not None else load_affinity()

    def _belief_words(self, ctx: AgentContext) -> set[str]:
        return keywords(" ".join(ctx.persona.core_beliefs))

    def select_vote_candidates(self, ctx, pool, m):
        beliefs = self._belief_words(ctx)
        newest = sorted(pool, key=lambda p: p.post_id, reverse=True)[:m]
        return [
            VoteDecision(
                p.post_id,
                VoteDirection.UP if keywords(p.body) & beliefs else VoteDirection.DOWN,
            )
            for p in newest
        ]

    def select_reply_target(self, ctx, pool):
        others = [p for p in pool if p.author != ctx.actor_id]
        if not others:
            raise ValueError("reply target pool holds no posts by other actors")
        target = max(others, key=lambda p: p.post_id)
        author_type = ctx.roster.get(target.author)
        agrees = author_type in self.affinity.get(ctx.persona.archetype, frozenset())
        return PostIntent(PostKind.REPLY, target.post_id, Stance.AGREE if agrees else Stance.DISAGREE,
                          target_post=target)

    def _search(self, ctx: AgentContext, tools) -> tuple[list[ToolCall], str | None]:
        if tools is None or not tools.has(ToolId.WEB_SEARCH):
            return [], None
        queries = [q for q in (*ctx.persona.core_beliefs[:1], ctx.topic) if q.strip()]
        trace = []
        for query in queries[:_MAX_SEARCH_ROUNDS]:
            results = tools.web_search(query)
            summary = results[0].title if results else "no results"
            trace.append(ToolCall(ToolId.WEB_SEARCH.value, query, summary))
            if results:
                return trace, results[0].title
        return trace, None

    def generate_content(self, ctx, intent, tools):
        persona = ctx.persona
        trace, evidence = self._search(ctx, tools)

        sentences = [_OPENERS[persona.archetype]]
        if intent.kind is PostKind.REPLY:
            verb = "agree with" if intent.stance is Stance.AGREE else "disagree with"
            excerpt = ""
            if intent.target_post is not None:
                excerpt = " ".join(intent.target_post.body.split()[:6])
            sentences.append(f"I {verb} post #{intent.target} which said {excerpt}")
        if evidence:
            sentences.append(f"evidence suggests {evidence}")
        rest = [*persona.core_beliefs, *_FILLER]
        shift = len(ctx.own_post_history) % len(rest)
        sentences.extend(rest[shift:] + rest[:shift])

        lo, hi = persona.response_length
        key = f"{ctx.actor_id}|{intent.kind.value}|{intent.target}|{len(ctx.visible_posts)}|{len(ctx.own_post_history)}"
        n_words = lo + zlib.crc32(key.encode("utf-8")) % (hi - lo + 1)

        words: list[str] = []
        while len(words) < n_words:
            for sentence in sentences:
                words.extend(sentence.rstrip(".").split())
                if len(words) >= n_words:
                    break
        body = " ".join(words[:n_words]).rstrip(",;:.") + "."
        return GeneratedContent(body, tuple(trace))
