"""Agent backend contract and the validators every backend's output passes through."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from ..core import Archetype, Persona, Post, PostKind, Stance, ToolCall, VoteDirection, VoteRecord

log = logging.getLogger(__name__)


class AgentBackendKind(str, Enum):
    SCRIPTED = "Scripted"
    CHAT_COMPLETION_HTTP = "ChatCompletionHttp"


class AgentError(Exception):
    """An agent backend could not produce a usable answer."""


class AgentTransportError(AgentError):
    """The backend's remote endpoint failed or timed out."""


class AgentContentError(AgentError):
    """The backend answered, but the answer is unusable (empty, malformed, invalid target)."""


@dataclass(frozen=True)
class VoteDecision:
    target: int
    direction: VoteDirection
    rationale: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "direction", VoteDirection(self.direction))


@dataclass(frozen=True)
class PostIntent:
    kind: PostKind
    target: int | None = None
    stance: Stance | None = None
    # the target post itself, so backends can quote it without another history lookup
    target_post: Post | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PostKind(self.kind))
        if self.stance is not None:
            object.__setattr__(self, "stance", Stance(self.stance))
        if (self.kind is PostKind.REPLY) != (self.target is not None):
            raise ValueError("a Reply intent needs a target and a NewComment intent must not have one")


@dataclass(frozen=True)
class AgentContext:
    actor_id: str
    persona: Persona
    visible_posts: tuple[Post, ...] = ()
    own_action_history: tuple[VoteRecord, ...] = ()
    own_post_history: tuple[Post, ...] = ()
    provisioned_tools: tuple[str, ...] = ()
    topic: str = ""
    # author -> archetype for everyone in the cast
    roster: dict[str, Archetype] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class GeneratedContent:
    body: str
    tool_trace: tuple[ToolCall, ...] = ()


class AgentBackend:
    """What the behavior procedures ask of an actor's agent."""

    kind: AgentBackendKind

    def select_vote_candidates(self, ctx: AgentContext, pool: list[Post], m: int) -> list[VoteDecision]:
        raise NotImplementedError

    def select_reply_target(self, ctx: AgentContext, pool: list[Post]) -> PostIntent:
        raise NotImplementedError

    def generate_content(self, ctx: AgentContext, intent: PostIntent, tools) -> GeneratedContent:
        raise NotImplementedError


def validate_vote_decisions(decisions, pool: list[Post], m: int) -> tuple[list[VoteDecision], list[str]]:
    """Keep at most ``m`` decisions over distinct pool members; report the rest."""
    allowed = {p.post_id for p in pool}
    kept: list[VoteDecision] = []
    seen: set[int] = set()
    warnings = []
    for d in decisions:
        if d.target not in allowed:
            warnings.append(f"dropped vote candidate {d.target}: not an eligible post")
        elif d.target in seen:
            warnings.append(f"dropped vote candidate {d.target}: duplicate")
        elif len(kept) >= m:
            warnings.append(f"dropped vote candidate {d.target}: more than {m} candidates")
        else:
            kept.append(d)
            seen.add(d.target)
    return kept, warnings


def validate_reply_intent(intent: PostIntent, pool: list[Post]) -> PostIntent:
    if intent.kind is not PostKind.REPLY or intent.stance is None:
        raise AgentContentError("reply target selection must return a Reply intent with a stance")
    for post in pool:
        if post.post_id == intent.target:
            return PostIntent(PostKind.REPLY, intent.target, intent.stance, target_post=post)
    raise AgentContentError(f"reply target {intent.target} is not an eligible post")


def validate_content(content: GeneratedContent) -> GeneratedContent:
    if not content.body or not content.body.strip():
        raise AgentContentError("generated body is empty")
    return content
