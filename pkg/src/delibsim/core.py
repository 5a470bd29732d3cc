"""Domain types, shared discussion state and the seeded randomness contract."""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Archetype",
    "HistoryScope",
    "PostKind",
    "Stance",
    "VoteDirection",
    "Procedure",
    "ConfigError",
    "Persona",
    "ActorConfig",
    "ToolCall",
    "Post",
    "VoteRecord",
    "ScheduledEvent",
    "SharedHistory",
    "Draw",
    "RandomSource",
    "draw_uniform",
    "validate_roster",
    "format_minutes",
]


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class Archetype(str, Enum):
    CASUAL_USER = "CasualUser"
    EXPERT = "Expert"
    ADVOCATE = "Advocate"
    SKEPTIC = "Skeptic"
    CUSTOM = "Custom"


class HistoryScope(str, Enum):
    FULL = "Full"
    RECENT_ONLY = "RecentOnly"


class PostKind(str, Enum):
    NEW_COMMENT = "NewComment"
    REPLY = "Reply"


class Stance(str, Enum):
    AGREE = "Agree"
    DISAGREE = "Disagree"


class VoteDirection(str, Enum):
    UP = "Up"
    DOWN = "Down"


class Procedure(str, Enum):
    POST = "PostProc"
    ACTION = "ActionProc"


@dataclass(frozen=True)
class Persona:
    actor_name: str
    archetype: Archetype
    biography: str = ""
    tone: str = ""
    content_style: str = ""
    response_length: tuple[int, int] = (10, 20)
    history_scope: HistoryScope = HistoryScope.FULL
    core_beliefs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "archetype", Archetype(self.archetype))
        object.__setattr__(self, "history_scope", HistoryScope(self.history_scope))
        object.__setattr__(self, "core_beliefs", tuple(self.core_beliefs))
        lo, hi = self.response_length
        object.__setattr__(self, "response_length", (int(lo), int(hi)))
        if lo < 1 or lo > hi:
            raise ConfigError(
                f"response_length must satisfy 1 <= min <= max, got ({lo}, {hi})",
                "response_length",
            )
        if self.archetype is Archetype.CUSTOM and not self.biography.strip():
            raise ConfigError("Custom archetype requires a non-empty biography", "biography")


@dataclass(frozen=True)
class ActorConfig:
    actor_id: str
    persona: Persona
    lambda_post: float
    lambda_action: float
    p_reply: float
    theta_action: float
    candidate_count_M: int = 3
    tools: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tools", tuple(self.tools))
        if not self.actor_id:
            raise ConfigError("actor_id must be non-empty", "actor_id")
        for name in ("lambda_post", "lambda_action"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"must be a positive finite rate, got {value!r}", name)
        for name in ("p_reply", "theta_action"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise ConfigError(f"must lie in [0, 1], got {value!r}", name)
        if int(self.candidate_count_M) != self.candidate_count_M or self.candidate_count_M < 1:
            raise ConfigError(
                f"must be a positive integer, got {self.candidate_count_M!r}", "candidate_count_M"
            )

    def rate(self, procedure: Procedure) -> float:
        return self.lambda_post if procedure is Procedure.POST else self.lambda_action


def validate_roster(actors: Iterable[ActorConfig]) -> list[ActorConfig]:
    actors = list(actors)
    seen = set()
    for i, actor in enumerate(actors):
        if actor.actor_id in seen:
            raise ConfigError(f"duplicate actor_id {actor.actor_id!r}", f"actors[{i}].actor_id")
        seen.add(actor.actor_id)
    return actors


@dataclass(frozen=True)
class ToolCall:
    tool: str
    query: str
    summary: str

    def to_dict(self) -> dict:
        return {"tool": self.tool, "query": self.query, "summary": self.summary}


@dataclass(frozen=True)
class Post:
    post_id: int | None
    author: str
    timestamp: float
    body: str
    kind: PostKind = PostKind.NEW_COMMENT
    parent: int | None = None
    stance: Stance | None = None
    tool_trace: tuple[ToolCall, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PostKind(self.kind))
        if self.stance is not None:
            object.__setattr__(self, "stance", Stance(self.stance))
        object.__setattr__(
            self,
            "tool_trace",
            tuple(t if isinstance(t, ToolCall) else ToolCall(**t) for t in self.tool_trace),
        )
        if self.kind is PostKind.REPLY and self.parent is None:
            raise ValueError("a Reply requires a parent post_id")
        if self.kind is PostKind.NEW_COMMENT and (self.parent is not None or self.stance is not None):
            raise ValueError("a NewComment carries neither parent nor stance")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be non-negative, got {self.timestamp}")

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "author": self.author,
            "timestamp": self.timestamp,
            "body": self.body,
            "kind": self.kind.value,
            "parent": self.parent,
            "stance": self.stance.value if self.stance else None,
            "tool_trace": [t.to_dict() for t in self.tool_trace],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Post:
        return cls(
            post_id=data["post_id"],
            author=data["author"],
            timestamp=float(data["timestamp"]),
            body=data["body"],
            kind=PostKind(data["kind"]),
            parent=data.get("parent"),
            stance=Stance(data["stance"]) if data.get("stance") else None,
            tool_trace=tuple(ToolCall(**t) for t in data.get("tool_trace", [])),
        )


@dataclass(frozen=True)
class VoteRecord:
    voter: str
    target: int
    direction: VoteDirection
    timestamp: float

    def __post_init__(self):
        object.__setattr__(self, "direction", VoteDirection(self.direction))

    def to_dict(self) -> dict:
        return {
            "voter": self.voter,
            "target": self.target,
            "direction": self.direction.value,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> VoteRecord:
        return cls(
            voter=data["voter"],
            target=int(data["target"]),
            direction=VoteDirection(data["direction"]),
            timestamp=float(data["timestamp"]),
        )


@dataclass(frozen=True, order=True)
class ScheduledEvent:
    fire_time: float
    sequence: int
    actor: str = field(compare=False)
    procedure: Procedure = field(compare=False)

    def __post_init__(self):
        if self.fire_time < 0:
            raise ValueError(f"fire_time must be non-negative, got {self.fire_time}")


def format_minutes(value: float) -> str:
    """Render a timestamp as a JSON number with at least three fractional digits."""
    text = np.format_float_positional(float(value), unique=True, trim="-")
    whole, _, frac = text.partition(".")
    return f"{whole}.{frac.ljust(3, '0')}"


def _jsonl_line(record: dict, record_type: str) -> str:
    parts = [f'"record_type": "{record_type}"']
    for key, value in record.items():
        rendered = format_minutes(value) if key == "timestamp" else json.dumps(value, ensure_ascii=False)
        parts.append(f"{json.dumps(key)}: {rendered}")
    return "{" + ", ".join(parts) + "}"


@dataclass
class SharedHistory:
    """Every published post and executed vote of a run, in publication order."""

    posts: list[Post] = field(default_factory=list)
    votes: list[VoteRecord] = field(default_factory=list)

    def __post_init__(self):
        self._by_id = {p.post_id: p for p in self.posts}
        self._pairs = {(v.voter, v.target) for v in self.votes}

    def add_post(self, post: Post) -> None:
        if post.post_id is None:
            raise ValueError("only published posts (with post_id) enter the history")
        if post.post_id in self._by_id:
            raise ValueError(f"duplicate post_id {post.post_id}")
        if post.kind is PostKind.REPLY:
            parent = self._by_id.get(post.parent)
            if parent is None or parent.post_id >= post.post_id:
                raise ValueError(f"reply {post.post_id} has no earlier parent {post.parent}")
            if parent.author == post.author:
                raise ValueError(f"reply {post.post_id} targets its own author's post")
        self.posts.append(post)
        self._by_id[post.post_id] = post

    def add_vote(self, vote: VoteRecord) -> None:
        target = self._by_id.get(vote.target)
        if target is None:
            raise ValueError(f"vote on unknown post {vote.target}")
        if target.author == vote.voter:
            raise ValueError(f"{vote.voter} cannot vote on own post {vote.target}")
        if (vote.voter, vote.target) in self._pairs:
            raise ValueError(f"{vote.voter} already voted on {vote.target}")
        self.votes.append(vote)
        self._pairs.add((vote.voter, vote.target))

    def get(self, post_id: int) -> Post | None:
        return self._by_id.get(post_id)

    def has_voted(self, voter: str, target: int) -> bool:
        return (voter, target) in self._pairs

    def posts_by(self, actor_id: str) -> list[Post]:
        return [p for p in self.posts if p.author == actor_id]

    def votes_by(self, actor_id: str) -> list[VoteRecord]:
        return [v for v in self.votes if v.voter == actor_id]

    def iter_jsonl(self) -> Iterator[str]:
        for post in self.posts:
            yield _jsonl_line(post.to_dict(), "post")
        for vote in self.votes:
            yield _jsonl_line(vote.to_dict(), "vote")

    def to_jsonl(self) -> str:
        return "".join(line + "\n" for line in self.iter_jsonl())

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8", newline="\n")

    @classmethod
    def from_jsonl(cls, text: str) -> SharedHistory:
        history = cls()
        for lineno, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            data = json.loads(line)
            kind = data.pop("record_type", None)
            if kind == "post":
                history.add_post(Post.from_dict(data))
            elif kind == "vote":
                history.add_vote(VoteRecord.from_dict(data))
            else:
                raise ValueError(f"line {lineno}: unknown record_type {kind!r}")
        return history

    @classmethod
    def load(cls, path: str | Path) -> SharedHistory:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))

    def __eq__(self, other):
        if not isinstance(other, SharedHistory):
            return NotImplemented
        return self.posts == other.posts and self.votes == other.votes


@dataclass(frozen=True)
class Draw:
    stream: str
    kind: str
    value: float


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


class RandomSource:
    """Seeded random stream with stable, label-addressed child streams.

    ``spawn(label)`` derives an independent child from the master seed and the
    label path alone, so adding or removing a sibling stream never changes
    the draws of another. When ``log`` is a list, every draw is appended to it
    (shared by all descendants) in consumption order.
    """

    def __init__(self, seed: int, *, log: list[Draw] | None = None, _path: tuple[str, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.log = log
        self.path = _path
        seq = np.random.SeedSequence(self.seed, spawn_key=tuple(_label_key(p) for p in _path))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    @property
    def label(self) -> str:
        return "/".join(self.path)

    def spawn(self, label: str) -> RandomSource:
        return RandomSource(self.seed, log=self.log, _path=self.path + (label,))

    def _record(self, kind: str, value: float) -> float:
        if self.log is not None:
            self.log.append(Draw(self.label, kind, value))
        return value

    def uniform(self) -> float:
        return self._record("uniform", float(self._gen.random()))

    def exponential(self, rate: float) -> float:
        return self._record("exponential", float(self._gen.exponential(1.0 / rate)))

    def poisson(self, lam: float) -> float:
        return self._record("poisson", float(self._gen.poisson(lam)))


def draw_uniform(rng: RandomSource) -> float:
    return rng.uniform()
