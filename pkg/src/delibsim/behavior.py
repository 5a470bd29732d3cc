"""Per-event actor procedures: voting on existing posts and publishing a post."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from .agent.base import (
    AgentContentError,
    AgentContext,
    PostIntent,
    VoteDecision,
    validate_content,
    validate_reply_intent,
    validate_vote_decisions,
)
from .core import ActorConfig, HistoryScope, Post, PostKind, RandomSource, SharedHistory, VoteRecord
from .platform.errors import DuplicateVoteError, PlatformValidationError, PublishError

__all__ = [
    "DEFAULT_RECENT_WINDOW",
    "EventReport",
    "PostIntent",
    "VoteDecision",
    "build_context",
    "execute_action_event",
    "execute_post_event",
    "reply_pool",
    "visible_history",
    "vote_gate",
    "vote_pool",
]

log = logging.getLogger(__name__)

DEFAULT_RECENT_WINDOW = 10


@dataclass
class EventReport:
    """What happened inside one procedure call, for traces and diagnostics."""

    branch: str | None = None
    fallback: bool = False
    skipped: str | None = None
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        log.warning(message)
        self.warnings.append(message)


def visible_history(actor: ActorConfig, history: SharedHistory, k: int = DEFAULT_RECENT_WINDOW) -> list[Post]:
    posts = sorted(history.posts, key=lambda p: p.post_id)
    if actor.persona.history_scope is HistoryScope.RECENT_ONLY:
        return posts[-k:] if k > 0 else []
    return posts


def vote_pool(actor: ActorConfig, history: SharedHistory) -> list[Post]:
    """Posts by other actors that this actor has not yet voted on."""
    return [
        p for p in history.posts
        if p.author != actor.actor_id and not history.has_voted(actor.actor_id, p.post_id)
    ]


def reply_pool(actor: ActorConfig, history: SharedHistory) -> list[Post]:
    return [p for p in history.posts if p.author != actor.actor_id]


def vote_gate(u: float, theta: float) -> bool:
    return u > theta


def build_context(actor: ActorConfig, history: SharedHistory, *, recent_window: int = DEFAULT_RECENT_WINDOW,
                  topic: str = "", roster=None) -> AgentContext:
    return AgentContext(
        actor_id=actor.actor_id,
        persona=actor.persona,
        visible_posts=tuple(visible_history(actor, history, recent_window)),
        own_action_history=tuple(history.votes_by(actor.actor_id)),
        own_post_history=tuple(history.posts_by(actor.actor_id)),
        provisioned_tools=actor.tools,
        topic=topic,
        roster=roster or {},
    )


def execute_action_event(
    actor: ActorConfig,
    history: SharedHistory,
    agent,
    tools,
    rng: RandomSource,
    *,
    timestamp: float,
    recent_window: int = DEFAULT_RECENT_WINDOW,
    topic: str = "",
    roster=None,
    report: EventReport | None = None,
) -> list[VoteRecord]:
    """Ask the agent for up to M vote candidates and execute each one that passes the gate.

    One uniform draw is consumed per validated candidate, in the order the
    agent returned them. Agent errors propagate to the caller; platform
    rejections of a single vote only drop that vote.
    """
    report = report if report is not None else EventReport()
    pool = vote_pool(actor, history)
    if not pool:
        return []
    ctx = build_context(actor, history, recent_window=recent_window, topic=topic, roster=roster)
    decisions = agent.select_vote_candidates(ctx, list(pool), actor.candidate_count_M)
    decisions, warnings = validate_vote_decisions(decisions, pool, actor.candidate_count_M)
    for w in warnings:
        report.warn(f"{actor.actor_id}: {w}")

    executed = []
    for decision in decisions:
        if not vote_gate(rng.uniform(), actor.theta_action):
            continue
        try:
            tools.vote(decision.target, decision.direction, timestamp)
        except (DuplicateVoteError, PlatformValidationError, PublishError) as exc:
            report.warn(f"{actor.actor_id}: vote on {decision.target} not recorded: {exc}")
            continue
        record = VoteRecord(actor.actor_id, decision.target, decision.direction, timestamp)
        history.add_vote(record)
        executed.append(record)
    return executed


def execute_post_event(
    actor: ActorConfig,
    history: SharedHistory,
    agent,
    tools,
    rng: RandomSource,
    *,
    timestamp: float,
    recent_window: int = DEFAULT_RECENT_WINDOW,
    topic: str = "",
    roster=None,
    report: EventReport | None = None,
) -> Post | None:
    """Publish one new comment or reply; returns None when the event is skipped.

    A single uniform draw picks the reply branch when it is at most
    ``p_reply``. If no post by another actor exists yet the event degrades to
    a new comment (``report.fallback``).
    """
    report = report if report is not None else EventReport()
    ctx = build_context(actor, history, recent_window=recent_window, topic=topic, roster=roster)
    intent = PostIntent(PostKind.NEW_COMMENT)

    if rng.uniform() <= actor.p_reply:
        pool = reply_pool(actor, history)
        if pool:
            report.branch = PostKind.REPLY.value
            intent = validate_reply_intent(agent.select_reply_target(ctx, list(pool)), pool)
        else:
            report.fallback = True
    if report.branch is None:
        report.branch = PostKind.NEW_COMMENT.value

    try:
        content = validate_content(agent.generate_content(ctx, intent, tools))
    except AgentContentError as exc:
        report.skipped = f"content: {exc}"
        report.warn(f"{actor.actor_id}: post event skipped: {exc}")
        return None

    draft = Post(
        post_id=None,
        author=actor.actor_id,
        timestamp=timestamp,
        body=content.body,
        kind=intent.kind,
        parent=intent.target,
        stance=intent.stance,
        tool_trace=content.tool_trace,
    )
    try:
        post_id = tools.publish(draft)
    except (PlatformValidationError, PublishError) as exc:
        report.skipped = f"publish: {exc}"
        report.warn(f"{actor.actor_id}: publish rejected: {exc}")
        return None
    post = replace(draft, post_id=post_id)
    history.add_post(post)
    return post
