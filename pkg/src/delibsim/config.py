"""Run configuration: loading, validation, defaults and component factories."""

from __future__ import annotations

import copy
import hashlib
import json
import os
import secrets
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .agent import ChatCompletionAgent, ScriptedAgent, load_affinity
from .agent.http import DEFAULT_API_KEY_ENV, load_prompts
from .behavior import DEFAULT_RECENT_WINDOW
from .core import ActorConfig, ConfigError, Persona
from .platform import FixtureSearch, HttpPlatform, HttpSearch, InMemoryPlatform
from .scheduler import DEFAULT_EVENT_CAP, InterArrivalMode, SimulationRun

DEFAULT_CANDIDATE_COUNT = 3
PRESET = "preset_pilot.yaml"


def _data_text(name: str) -> str:
    return resources.files("delibsim.data").joinpath(name).read_text("utf-8")


def config_schema() -> dict:
    return json.loads(_data_text("config.schema.json"))


def preset_path() -> Path:
    return Path(str(resources.files("delibsim.data").joinpath(PRESET)))


@dataclass
class SimulationConfig:
    run: SimulationRun
    backend: dict = field(default_factory=lambda: {"kind": "Scripted"})
    platform: dict = field(default_factory=lambda: {"kind": "InMemory"})
    search: dict = field(default_factory=lambda: {"kind": "fixture"})
    output_dir: str = "runs/out"
    seed_generated: bool = False
    base_dir: Path = field(default_factory=Path.cwd)

    def resolved(self) -> dict:
        """Fully explicit config document (defaults applied, seed fixed)."""
        r = self.run
        return {
            "topic": r.topic,
            "horizon": r.horizon,
            "seed": r.seed,
            "mode": r.mode.value,
            "candidate_count": _common_m(r.actors),
            "recent_window": r.recent_window,
            "event_cap": r.event_cap,
            "backend": dict(self.backend),
            "platform": dict(self.platform),
            "search": dict(self.search),
            "output_dir": self.output_dir,
            "actors": [_actor_dict(a) for a in r.actors],
        }

    def config_hash(self) -> str:
        """Digest of the simulation inputs; where the artifacts are written does not count."""
        doc = {k: v for k, v in self.resolved().items() if k != "output_dir"}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def with_overrides(self, *, seed=None, horizon=None, mode=None, output_dir=None) -> SimulationConfig:
        data = self.resolved()
        if seed is not None:
            data["seed"] = seed
        if horizon is not None:
            data["horizon"] = horizon
        if mode is not None:
            data["mode"] = InterArrivalMode(mode).value
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        cfg = parse_config(data, base_dir=self.base_dir)
        cfg.seed_generated = self.seed_generated and seed is None
        return cfg


def _common_m(actors) -> int:
    values = {a.candidate_count_M for a in actors}
    return values.pop() if len(values) == 1 else DEFAULT_CANDIDATE_COUNT


def _actor_dict(a: ActorConfig) -> dict:
    p = a.persona
    return {
        "actor_id": a.actor_id,
        "persona": {
            "actor_name": p.actor_name,
            "archetype": p.archetype.value,
            "biography": p.biography,
            "tone": p.tone,
            "content_style": p.content_style,
            "response_length": list(p.response_length),
            "history_scope": p.history_scope.value,
            "core_beliefs": list(p.core_beliefs),
        },
        "lambda_post": a.lambda_post,
        "lambda_action": a.lambda_action,
        "p_reply": a.p_reply,
        "theta_action": a.theta_action,
        "candidate_count_M": a.candidate_count_M,
        "tools": list(a.tools),
    }


def _field_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _line_of(node, path) -> int | None:
    """1-based source line of the YAML node at ``path``, or of its nearest ancestor."""
    line = None
    for part in path:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if getattr(k, "value", None) == part), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
        else:
            node = None
    if node is not None:
        line = node.start_mark.line + 1
    return line


class ConfigFileError(ConfigError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None, source=None):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if source and line else (f"{source}: " if source else "")
        super().__init__(message, field)
        self.args = (f"{where}{field}: {message}" if field else f"{where}{message}",)


def parse_config(data: dict, *, base_dir: str | Path = ".", source=None, node=None) -> SimulationConfig:
    """Validate a config document and build the run inputs, applying defaults."""
    if not isinstance(data, dict):
        raise ConfigFileError("config document must be a mapping", source=source)
    validator = jsonschema.Draft202012Validator(config_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        raise ConfigFileError(err.message, _field_path(path), _line_of(node, path) if node else None, source)

    default_m = data.get("candidate_count", DEFAULT_CANDIDATE_COUNT)
    actors = []
    for i, raw in enumerate(data["actors"]):
        try:
            persona = Persona(**{
                **raw["persona"],
                "response_length": tuple(raw["persona"].get("response_length", (10, 20))),
                "core_beliefs": tuple(raw["persona"].get("core_beliefs", ())),
            })
            actors.append(ActorConfig(
                actor_id=raw["actor_id"],
                persona=persona,
                lambda_post=raw["lambda_post"],
                lambda_action=raw["lambda_action"],
                p_reply=raw["p_reply"],
                theta_action=raw["theta_action"],
                candidate_count_M=raw.get("candidate_count_M", default_m),
                tools=tuple(raw.get("tools", ("PublishPost", "FetchHistory", "Vote"))),
            ))
        except ConfigError as exc:
            sub = ["persona", exc.field] if exc.field in ("response_length", "biography") else [exc.field]
            path = ["actors", i, *[s for s in sub if s]]
            msg = str(exc).split(": ", 1)[-1]
            raise ConfigFileError(msg, _field_path(path), _line_of(node, path) if node else None, source) from exc

    seed = data.get("seed")
    generated = seed is None
    if generated:
        seed = secrets.randbits(64)
    try:
        run = SimulationRun(
            actors=tuple(actors),
            horizon=float(data["horizon"]),
            seed=int(seed),
            mode=InterArrivalMode(data.get("mode", InterArrivalMode.EXPONENTIAL_RATE.value)),
            recent_window=int(data.get("recent_window", DEFAULT_RECENT_WINDOW)),
            event_cap=int(data.get("event_cap", DEFAULT_EVENT_CAP)),
            topic=data.get("topic", ""),
        )
    except ConfigError as exc:
        path = exc.field.split(".") if exc.field else []
        if exc.field and exc.field.startswith("actors["):
            idx = int(exc.field[len("actors["):].split("]")[0])
            path = ["actors", idx, "actor_id"]
        line = _line_of(node, path) if node and path else None
        raise ConfigFileError(str(exc).split(": ", 1)[-1], exc.field, line, source) from exc

    return SimulationConfig(
        run=run,
        backend=dict(data.get("backend", {"kind": "Scripted"})),
        platform=dict(data.get("platform", {"kind": "InMemory"})),
        search=dict(data.get("search", {"kind": "fixture"})),
        output_dir=data.get("output_dir", "runs/out"),
        seed_generated=generated,
        base_dir=Path(base_dir),
    )


def load_config(path: str | Path) -> SimulationConfig:
    """Read a YAML or JSON config file; a run_meta.json is accepted and re-runs its config."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigFileError(f"cannot read config: {exc.strerror or exc}", source=str(path)) from exc
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigFileError(f"not valid YAML/JSON: {exc}", line=mark.line + 1 if mark else None,
                              source=str(path)) from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict) and "config_hash" in data:
        data = copy.deepcopy(data["config"])
        node = None
    return parse_config(data, base_dir=path.parent, source=str(path), node=node)


def load_preset() -> SimulationConfig:
    return load_config(preset_path())


# component factories

def _resolve(cfg: SimulationConfig, value: str | None) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else cfg.base_dir / p


def build_agents(cfg: SimulationConfig) -> dict:
    b = cfg.backend
    if b["kind"] == "Scripted":
        affinity = load_affinity(_resolve(cfg, b.get("affinity_file")))
        return {a.actor_id: ScriptedAgent(affinity) for a in cfg.run.actors}
    prompts = load_prompts(_resolve(cfg, b.get("prompts_file")))
    return {
        a.actor_id: ChatCompletionAgent(
            b["endpoint"],
            b["model"],
            api_key_env=b.get("api_key_env", DEFAULT_API_KEY_ENV),
            timeout=b.get("timeout", 60.0),
            retries=b.get("retries", 2),
            temperature=b.get("temperature", 0.7),
            prompts=prompts,
            max_visible_posts=b.get("max_visible_posts"),
        )
        for a in cfg.run.actors
    }


def build_platform(cfg: SimulationConfig):
    p = cfg.platform
    if p["kind"] == "InMemory":
        return InMemoryPlatform()
    token = os.environ.get(p["token_env"]) if p.get("token_env") else None
    return HttpPlatform(
        p["base_url"],
        posts_path=p.get("posts_path", "/posts"),
        votes_path=p.get("votes_path", "/posts/{id}/votes"),
        token=token,
        timeout=p.get("timeout", 10.0),
    )


def build_search(cfg: SimulationConfig):
    s = cfg.search
    if s["kind"] == "http":
        return HttpSearch(s["url"], timeout=s.get("timeout", 10.0))
    return FixtureSearch(path=_resolve(cfg, s.get("fixture")))
