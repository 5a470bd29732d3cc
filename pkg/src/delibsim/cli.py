"""Command-line entry points: ``run``, ``report`` and ``validate``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .agent import AgentError
from .behavior import DEFAULT_RECENT_WINDOW
from .config import DEFAULT_CANDIDATE_COUNT, SimulationConfig, build_agents, build_platform, build_search, load_config
from .core import ConfigError, RandomSource, SharedHistory
from .metrics import ACTIONS_DEFINITION, actor_breakdown, export_report, per_minute_activity
from .scheduler import InterArrivalMode, SimulationResult, run_simulation

log = logging.getLogger("delibsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_PLATFORM = 4
EXIT_ABORTED = 5


def run_metadata(cfg: SimulationConfig, result: SimulationResult) -> dict:
    run = cfg.run
    return {
        "tool": "delibsim",
        "version": __version__,
        "seed": run.seed,
        "seed_generated": cfg.seed_generated,
        "mode": run.mode.value,
        "horizon": run.horizon,
        "defaults": {
            "candidate_count": DEFAULT_CANDIDATE_COUNT,
            "recent_window": DEFAULT_RECENT_WINDOW,
            "mode": InterArrivalMode.EXPONENTIAL_RATE.value,
        },
        "candidate_count": {a.actor_id: a.candidate_count_M for a in run.actors},
        "recent_window": run.recent_window,
        "event_cap": run.event_cap,
        "actors": [
            {
                "actor_id": a.actor_id,
                "actor_name": a.persona.actor_name,
                "archetype": a.persona.archetype.value,
                "lambda_post": a.lambda_post,
                "lambda_action": a.lambda_action,
                "p_reply": a.p_reply,
                "theta_action": a.theta_action,
                "tools": list(a.tools),
            }
            for a in run.actors
        ],
        "event_counts": result.event_counts(),
        "totals": {"posts": len(result.history.posts), "votes": len(result.history.votes)},
        "complete": result.complete,
        "abort_reason": result.abort_reason,
        "warnings": len(result.warnings),
        "actions_definition": ACTIONS_DEFINITION,
        "backend": cfg.backend["kind"],
        "platform": cfg.platform["kind"],
        "config_hash": cfg.config_hash(),
        "config": cfg.resolved(),
    }


def write_run(cfg: SimulationConfig, result: SimulationResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    result.history.dump(out / "history.jsonl")
    meta = run_metadata(cfg, result)
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    series = per_minute_activity(result.history, cfg.run.horizon)
    breakdown = actor_breakdown(result.history, [a.actor_id for a in cfg.run.actors])
    export_report(series, breakdown, out)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config).with_overrides(
            seed=args.seed, horizon=args.horizon, mode=args.mode, output_dir=args.out
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        agents = build_agents(cfg)
    except AgentError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    platform = build_platform(cfg)
    search = build_search(cfg)

    result = run_simulation(cfg.run, agents, platform, RandomSource(cfg.run.seed), search=search, pace=args.pace)
    out = Path(cfg.output_dir)
    write_run(cfg, result, out)

    totals = f"{len(result.history.posts)} posts, {len(result.history.votes)} votes"
    if not result.complete:
        print(f"run incomplete ({totals}): {result.abort_reason}", file=sys.stderr)
        if result.abort_reason and result.abort_reason.startswith("platform"):
            return EXIT_PLATFORM
        return EXIT_ABORTED
    if result.trace and all(e.error for e in result.trace):
        print(f"every event failed in the agent backend; see {out / 'run_meta.json'}", file=sys.stderr)
        return EXIT_BACKEND
    print(f"seed {cfg.run.seed}: {totals} written to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    history_path = Path(args.history)
    try:
        history = SharedHistory.load(history_path)
    except (OSError, ValueError) as exc:
        print(f"cannot read history: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    horizon = args.horizon
    roster = ()
    meta_path = history_path.with_name("run_meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        roster = [a["actor_id"] for a in meta.get("actors", [])]
        if horizon is None:
            horizon = meta.get("horizon")
    if horizon is None:
        stamps = [p.timestamp for p in history.posts] + [v.timestamp for v in history.votes]
        horizon = math.ceil(max(stamps)) if stamps else 0
    out = Path(args.out) if args.out else history_path.parent
    files = export_report(per_minute_activity(history, horizon), actor_breakdown(history, roster), out)
    for path in files.values():
        print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = cfg.run
    print(f"ok: {len(run.actors)} actors, horizon {run.horizon:g} min, mode {run.mode.value}, "
          f"backend {cfg.backend['kind']}, platform {cfg.platform['kind']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delibsim", description="Synthetic deliberation simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings from the run")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a simulation")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--horizon", type=float)
    run.add_argument("--mode", choices=[m.value for m in InterArrivalMode])
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--pace", type=float, help="wall-clock seconds per simulated minute")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="recompute metrics from a history.jsonl")
    report.add_argument("--history", required=True)
    report.add_argument("--horizon", type=float)
    report.add_argument("--out")
    report.set_defaults(func=cmd_report)

    validate = sub.add_parser("validate", help="check a config file without running it")
    validate.add_argument("--config", required=True)
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
