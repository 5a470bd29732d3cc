"""Activity analytics over a finished discussion history.

Throughout, "votes" (the actions column) counts executed votes only, not the
number of action events an actor was scheduled for.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .core import PostKind, SharedHistory

ACTIONS_DEFINITION = "votes = executed votes (up or down), not scheduled action events"


class ReportError(OSError):
    def __init__(self, path, cause):
        self.path = Path(path)
        super().__init__(f"cannot write report file {self.path}: {cause}")


@dataclass
class ActivitySeries:
    # one (minute index, posts, executed votes) row per simulated minute
    minute_bins: list[tuple[int, int, int]]

    @property
    def posts(self) -> list[int]:
        return [b[1] for b in self.minute_bins]

    @property
    def votes(self) -> list[int]:
        return [b[2] for b in self.minute_bins]


@dataclass
class ActorCounts:
    post_count: int = 0
    executed_vote_count: int = 0
    new_comment_count: int = 0
    reply_count: int = 0


@dataclass
class ActorBreakdown:
    actors: dict[str, ActorCounts] = field(default_factory=dict)

    def __getitem__(self, actor_id: str) -> ActorCounts:
        return self.actors[actor_id]


def _bin(timestamp: float, n_bins: int) -> int:
    # a record stamped exactly at an integer horizon joins the last minute
    return min(int(math.floor(timestamp)), n_bins - 1)


def per_minute_activity(history: SharedHistory, horizon: float) -> ActivitySeries:
    n_bins = max(0, math.ceil(horizon))
    posts, votes = Counter(), Counter()
    if n_bins:
        for p in history.posts:
            posts[_bin(p.timestamp, n_bins)] += 1
        for v in history.votes:
            votes[_bin(v.timestamp, n_bins)] += 1
    return ActivitySeries([(b, posts[b], votes[b]) for b in range(n_bins)])


def actor_breakdown(history: SharedHistory, roster=()) -> ActorBreakdown:
    """Per-actor tallies; actors listed in ``roster`` appear even with no activity."""
    out = ActorBreakdown({a: ActorCounts() for a in roster})
    for p in history.posts:
        c = out.actors.setdefault(p.author, ActorCounts())
        c.post_count += 1
        if p.kind is PostKind.REPLY:
            c.reply_count += 1
        else:
            c.new_comment_count += 1
    for v in history.votes:
        out.actors.setdefault(v.voter, ActorCounts()).executed_vote_count += 1
    return out


def _write(path: Path, writer) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
    except OSError as exc:
        raise ReportError(path, exc) from exc


def export_report(series: ActivitySeries, breakdown: ActorBreakdown, path: str | Path) -> dict[str, Path]:
    """Write activity.csv, actors.csv and plot_data.json into directory ``path``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(out, exc) from exc
    files = {
        "activity": out / "activity.csv",
        "actors": out / "actors.csv",
        "plot_data": out / "plot_data.json",
    }

    def activity(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["minute", "posts", "votes"])
        w.writerows(series.minute_bins)

    def actors(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["actor", "posts", "votes", "new", "replies"])
        for actor, c in breakdown.actors.items():
            w.writerow([actor, c.post_count, c.executed_vote_count, c.new_comment_count, c.reply_count])

    def plot_data(fh):
        json.dump(
            {
                "definitions": {"votes": ACTIONS_DEFINITION, "minute": "floor of the timestamp in minutes"},
                "activity": {
                    "minute": [b[0] for b in series.minute_bins],
                    "posts": series.posts,
                    "votes": series.votes,
                },
                "actors": {
                    actor: {
                        "posts": c.post_count,
                        "votes": c.executed_vote_count,
                        "new": c.new_comment_count,
                        "replies": c.reply_count,
                    }
                    for actor, c in breakdown.actors.items()
                },
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    _write(files["activity"], activity)
    _write(files["actors"], actors)
    _write(files["plot_data"], plot_data)
    return files


def read_report(path: str | Path) -> tuple[ActivitySeries, ActorBreakdown]:
    """Parse the CSV files written by :func:`export_report`."""
    out = Path(path)
    with open(out / "activity.csv", encoding="utf-8", newline="") as fh:
        rows = [(int(r["minute"]), int(r["posts"]), int(r["votes"])) for r in csv.DictReader(fh)]
    breakdown = ActorBreakdown()
    with open(out / "actors.csv", encoding="utf-8", newline="") as fh:
        for r in csv.DictReader(fh):
            breakdown.actors[r["actor"]] = ActorCounts(
                int(r["posts"]), int(r["votes"]), int(r["new"]), int(r["replies"])
            )
    return ActivitySeries(rows), breakdown
