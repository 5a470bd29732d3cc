"""Discrete-event dispatch of actor post and action events over a finite horizon."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .agent.base import AgentError
from .behavior import DEFAULT_RECENT_WINDOW, EventReport, execute_action_event, execute_post_event
from .core import (
    ActorConfig,
    ConfigError,
    Procedure,
    RandomSource,
    ScheduledEvent,
    SharedHistory,
    validate_roster,
)
from .platform.errors import PlatformTransportError
from .platform.tools import ToolSuite

__all__ = [
    "DEFAULT_EVENT_CAP",
    "ActorStreams",
    "EventQueue",
    "InterArrivalMode",
    "SimulationResult",
    "SimulationRun",
    "TraceEntry",
    "actor_streams",
    "initialize_queue",
    "run_simulation",
    "sample_interarrival",
]

log = logging.getLogger(__name__)

DEFAULT_EVENT_CAP = 10_000


class InterArrivalMode(str, Enum):
    EXPONENTIAL_RATE = "ExponentialRate"
    LITERAL_POISSON = "LiteralPoisson"


def sample_interarrival(rate: float, mode: InterArrivalMode, rng: RandomSource) -> float:
    """Waiting time until an actor's next event of one kind.

    ``ExponentialRate`` draws Exponential(rate), so events form a Poisson
    process with ``rate`` events per minute on average. ``LiteralPoisson``
    uses an integer Poisson(rate) draw directly as the gap, which may be 0.
    """
    if not rate > 0:
        raise ConfigError(f"inter-arrival rate must be positive, got {rate!r}", "rate")
    if InterArrivalMode(mode) is InterArrivalMode.EXPONENTIAL_RATE:
        return rng.exponential(rate)
    return rng.poisson(rate)


class EventQueue:
    """Min-heap of scheduled events keyed on (fire_time, insertion sequence)."""

    def __init__(self):
        self._heap: list[ScheduledEvent] = []
        self._counter = itertools.count()

    def push(self, fire_time: float, actor: str, procedure: Procedure) -> ScheduledEvent:
        event = ScheduledEvent(float(fire_time), next(self._counter), actor, Procedure(procedure))
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> ScheduledEvent:
        return heapq.heappop(self._heap)

    def peek(self) -> ScheduledEvent:
        return self._heap[0]

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def snapshot(self) -> list[ScheduledEvent]:
        return sorted(self._heap)


class ActorStreams(NamedTuple):
    post: RandomSource
    action: RandomSource
    behavior: RandomSource

    def timing(self, procedure: Procedure) -> RandomSource:
        return self.post if procedure is Procedure.POST else self.action


def actor_streams(rng: RandomSource, actor_id: str) -> ActorStreams:
    """Streams for one actor, derived from the master seed and the actor id only."""
    base = rng.spawn(actor_id)
    return ActorStreams(base.spawn("post-timing"), base.spawn("action-timing"), base.spawn("behavior"))


def initialize_queue(actors, mode: InterArrivalMode, rng: RandomSource, streams=None) -> EventQueue:
    actors = list(actors)
    if not actors:
        raise ConfigError("at least one actor is required", "actors")
    if streams is None:
        streams = {a.actor_id: actor_streams(rng, a.actor_id) for a in actors}
    queue = EventQueue()
    for actor in actors:
        s = streams[actor.actor_id]
        queue.push(sample_interarrival(actor.lambda_post, mode, s.post), actor.actor_id, Procedure.POST)
        queue.push(sample_interarrival(actor.lambda_action, mode, s.action), actor.actor_id, Procedure.ACTION)
    return queue


@dataclass(frozen=True)
class SimulationRun:
    actors: tuple[ActorConfig, ...]
    horizon: float
    seed: int
    mode: InterArrivalMode = InterArrivalMode.EXPONENTIAL_RATE
    recent_window: int = DEFAULT_RECENT_WINDOW
    event_cap: int = DEFAULT_EVENT_CAP
    topic: str = ""

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(validate_roster(self.actors)))
        object.__setattr__(self, "mode", InterArrivalMode(self.mode))
        if not self.actors:
            raise ConfigError("at least one actor is required", "actors")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise ConfigError(f"must be a finite non-negative number, got {self.horizon}", "horizon")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"must be an integer in [0, 2**64), got {self.seed!r}", "seed")
        if self.recent_window < 1:
            raise ConfigError(f"must be a positive integer, got {self.recent_window}", "recent_window")
        if self.event_cap < 1:
            raise ConfigError(f"must be a positive integer, got {self.event_cap}", "event_cap")


@dataclass(frozen=True)
class TraceEntry:
    fire_time: float
    actor: str
    procedure: Procedure
    branch: str | None = None
    fallback: bool = False
    post_id: int | None = None
    parent: int | None = None
    stance: str | None = None
    votes: tuple[tuple[int, str], ...] = ()
    skipped: str | None = None
    error: str | None = None


@dataclass
class SimulationResult:
    run: SimulationRun
    history: SharedHistory
    trace: list[TraceEntry] = field(default_factory=list)
    complete: bool = True
    abort_reason: str | None = None
    warnings: list[str] = field(default_factory=list)

    def event_counts(self) -> dict[str, dict[str, int]]:
        counts = {a.actor_id: Counter() for a in self.run.actors}
        for e in self.trace:
            c = counts[e.actor]
            c["post_events" if e.procedure is Procedure.POST else "action_events"] += 1
            c["posts"] += e.post_id is not None
            c["votes"] += len(e.votes)
            c["fallbacks"] += e.fallback
            c["skipped"] += e.skipped is not None
            c["errors"] += e.error is not None
        keys = ("post_events", "action_events", "posts", "votes", "fallbacks", "skipped", "errors")
        return {actor: {k: int(c[k]) for k in keys} for actor, c in counts.items()}


def run_simulation(
    run: SimulationRun,
    agents,
    platform,
    rng: RandomSource | None = None,
    *,
    search=None,
    pace: float | None = None,
    sleep=time.sleep,
) -> SimulationResult:
    """Dispatch events in time order until the queue passes ``run.horizon``.

    ``agents`` maps actor_id to its backend. Agent failures skip the event's
    effect but the actor is still rescheduled; an unreachable platform, or an
    actor exceeding ``run.event_cap`` events of one kind, aborts the run and
    the partial history is returned with ``complete=False``. With ``pace``
    set, the loop sleeps ``pace`` wall-clock seconds per simulated minute.
    """
    missing = [a.actor_id for a in run.actors if a.actor_id not in agents]
    if missing:
        raise ConfigError(f"no agent backend bound for {', '.join(missing)}", "agents")
    rng = rng if rng is not None else RandomSource(run.seed)
    history = SharedHistory()
    result = SimulationResult(run, history)
    if run.horizon <= 0:
        return result

    by_id = {a.actor_id: a for a in run.actors}
    roster = {a.actor_id: a.persona.archetype for a in run.actors}
    streams = {a.actor_id: actor_streams(rng, a.actor_id) for a in run.actors}
    tools = {a.actor_id: ToolSuite(platform, a.actor_id, a.tools, search) for a in run.actors}
    queue = initialize_queue(run.actors, run.mode, rng, streams)
    dispatched: Counter = Counter()
    clock = 0.0

    while queue:
        event = queue.pop()
        if event.fire_time > run.horizon:
            break
        key = (event.actor, event.procedure)
        dispatched[key] += 1
        if dispatched[key] > run.event_cap:
            result.complete = False
            result.abort_reason = (
                f"event cap {run.event_cap} exceeded by {event.actor} {event.procedure.value} "
                f"at t={event.fire_time:.3f}"
            )
            log.error(result.abort_reason)
            break
        if pace:
            sleep(max(0.0, event.fire_time - clock) * pace)
        clock = event.fire_time

        actor = by_id[event.actor]
        report = EventReport()
        post, votes, error = None, [], None
        kwargs = dict(timestamp=event.fire_time, recent_window=run.recent_window,
                      topic=run.topic, roster=roster, report=report)
        try:
            if event.procedure is Procedure.POST:
                post = execute_post_event(actor, history, agents[actor.actor_id], tools[actor.actor_id],
                                          streams[actor.actor_id].behavior, **kwargs)
            else:
                votes = execute_action_event(actor, history, agents[actor.actor_id], tools[actor.actor_id],
                                             streams[actor.actor_id].behavior, **kwargs)
        except AgentError as exc:
            error = f"{type(exc).__name__}: {exc}"
            report.warn(f"{actor.actor_id}: agent failure, event skipped: {exc}")
        except PlatformTransportError as exc:
            result.complete = False
            result.abort_reason = f"platform unreachable at t={event.fire_time:.3f}: {exc}"
            log.error(result.abort_reason)
            result.warnings.extend(report.warnings)
            result.trace.append(TraceEntry(event.fire_time, actor.actor_id, event.procedure,
                                           branch=report.branch, fallback=report.fallback,
                                           error=f"{type(exc).__name__}: {exc}"))
            break

        result.warnings.extend(report.warnings)
        result.trace.append(TraceEntry(
            fire_time=event.fire_time,
            actor=actor.actor_id,
            procedure=event.procedure,
            branch=report.branch,
            fallback=report.fallback,
            post_id=post.post_id if post else None,
            parent=post.parent if post else None,
            stance=post.stance.value if post and post.stance else None,
            votes=tuple((v.target, v.direction.value) for v in votes),
            skipped=report.skipped,
            error=error,
        ))
        gap = sample_interarrival(actor.rate(event.procedure), run.mode,
                                  streams[actor.actor_id].timing(event.procedure))
        queue.push(event.fire_time + gap, actor.actor_id, event.procedure)

    return result
