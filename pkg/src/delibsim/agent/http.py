"""Chat-completion backend: persona-conditioned LLM actors over an HTTP JSON API."""

from __future__ import annotations

import json
import logging
import os
import re
import time
from importlib import resources
from string import Template

import requests
import yaml

from ..core import Post, PostKind, Stance, ToolCall, VoteDirection
from ..platform.tools import ToolId
from .base import (
    AgentBackend,
    AgentBackendKind,
    AgentContentError,
    AgentContext,
    AgentError,
    AgentTransportError,
    GeneratedContent,
    PostIntent,
    VoteDecision,
)

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "CHORUS_API_KEY"
MAX_TOOL_ROUNDS = 2
_FENCE = re.compile(r"^```(?:json)?\s*|\s*```$", re.MULTILINE)

_SEARCH_TOOL = {
    "type": "function",
    "function": {
        "name": "web_search",
        "description": "Search the web for evidence to cite in the contribution.",
        "parameters": {
            "type": "object",
            "properties": {"query": {"type": "string"}},
            "required": ["query"],
        },
    },
}


def load_prompts(path=None) -> dict[str, str]:
    if path is None:
        text = resources.files("delibsim.data").joinpath("prompts.yaml").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return yaml.safe_load(text)


def parse_json_object(text: str | None) -> dict | None:
    """Best-effort extraction of one JSON object from model output."""
    if not text:
        return None
    text = _FENCE.sub("", text.strip())
    try:
        value = json.loads(text)
    except ValueError:
        start, end = text.find("{"), text.rfind("}")
        if start < 0 or end <= start:
            return None
        try:
            value = json.loads(text[start:end + 1])
        except ValueError:
            return None
    return value if isinstance(value, dict) else None


class ChatCompletionAgent(AgentBackend):
    kind = AgentBackendKind.CHAT_COMPLETION_HTTP

    def __init__(
        self,
        endpoint: str,
        model: str,
        *,
        api_key_env: str | None = DEFAULT_API_KEY_ENV,
        timeout: float = 60.0,
        retries: int = 2,
        backoff: float = 1.0,
        temperature: float = 0.7,
        prompts: dict[str, str] | None = None,
        session: requests.Session | None = None,
        max_visible_posts: int | None = None,
    ):
        if max_visible_posts is not None and max_visible_posts < 1:
            raise ValueError(f"max_visible_posts must be positive, got {max_visible_posts}")
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.temperature = temperature
        # only the newest posts are rendered into the prompt when set; the
        # selection pools themselves are never truncated
        self.max_visible_posts = max_visible_posts
        self.prompts = prompts or load_prompts()
        self.session = session or requests.Session()
        if api_key_env:
            key = os.environ.get(api_key_env, "").strip()
            if not key:
                raise AgentError(f"environment variable {api_key_env} holds no API key")
            self.session.headers["Authorization"] = f"Bearer {key}"

    # prompt assembly

    def _t(self, name: str, **values) -> str:
        return Template(self.prompts[name]).safe_substitute(**values)

    def system_prompt(self, ctx: AgentContext) -> str:
        p = ctx.persona
        return self._t(
            "system",
            actor_name=p.actor_name,
            topic=ctx.topic,
            archetype=p.archetype.value,
            biography=p.biography,
            tone=p.tone,
            content_style=p.content_style,
            beliefs="\n".join(f"- {b}" for b in p.core_beliefs) or "- (none stated)",
            min_words=p.response_length[0],
            max_words=p.response_length[1],
        ).strip()

    def _post_line(self, post: Post) -> str:
        note = f" replying to #{post.parent} ({post.stance.value.lower()})" if post.parent else ""
        return self._t("history_line", post_id=post.post_id, author=post.author, reply_note=note, body=post.body)

    def _history_block(self, posts) -> str:
        if self.max_visible_posts is not None:
            posts = posts[-self.max_visible_posts:]
        if not posts:
            return self.prompts["history_empty"]
        return "\n".join([self.prompts["history_header"], *(self._post_line(p) for p in posts)])

    def _messages(self, ctx: AgentContext, task: str) -> list[dict]:
        user = self._history_block(ctx.visible_posts) + "\n\n" + task.strip()
        return [
            {"role": "system", "content": self.system_prompt(ctx)},
            {"role": "user", "content": user},
        ]

    # transport

    def _complete(self, messages: list[dict], tools: list[dict] | None = None) -> dict:
        payload = {"model": self.model, "messages": messages, "temperature": self.temperature}
        if tools:
            payload["tools"] = tools
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * attempt)
            try:
                resp = self.session.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                log.warning("chat completion attempt %d failed: %s", attempt + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("chat completion attempt %d got %s", attempt + 1, last)
                continue
            if not resp.ok:
                raise AgentTransportError(f"chat completion rejected with HTTP {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise AgentTransportError(f"unexpected chat completion payload: {exc}") from exc
        raise AgentTransportError(f"chat completion failed after {self.retries + 1} attempts: {last}")

    def _ask_json(self, messages: list[dict], check) -> dict:
        """Request a JSON object; one reformat retry when parsing or ``check`` fails."""
        problem = None
        for attempt in range(2):
            message = self._complete(messages)
            content = message.get("content") or ""
            data = parse_json_object(content)
            problem = "no JSON object found" if data is None else check(data)
            if problem is None:
                return data
            if attempt == 0:
                messages = messages + [
                    {"role": "assistant", "content": content},
                    {"role": "user", "content": self._t("reformat", problem=problem)},
                ]
        raise AgentContentError(f"unusable model output after retry: {problem}")

    # backend contract

    def select_vote_candidates(self, ctx, pool, m):
        if not pool:
            return []
        task = self._t("select_votes", m=m, candidates="\n".join(self._post_line(p) for p in pool))

        def check(data):
            votes = data.get("votes")
            if not isinstance(votes, list):
                return 'expected a "votes" list'
            for v in votes:
                if not isinstance(v, dict) or str(v.get("direction", "")).lower() not in ("up", "down"):
                    return 'each vote needs "target" and a direction of "up" or "down"'
                try:
                    int(v.get("target"))
                except (TypeError, ValueError):
                    return 'each vote needs an integer "target"'
            return None

        data = self._ask_json(self._messages(ctx, task), check)
        return [
            VoteDecision(
                int(v["target"]),
                VoteDirection.UP if str(v["direction"]).lower() == "up" else VoteDirection.DOWN,
                v.get("rationale"),
            )
            for v in data["votes"]
        ]

    def select_reply_target(self, ctx, pool):
        if not pool:
            raise ValueError("reply target pool is empty")
        task = self._t("select_reply_target", candidates="\n".join(self._post_line(p) for p in pool))

        def check(data):
            if str(data.get("stance", "")).lower() not in ("agree", "disagree"):
                return 'expected "stance" of "agree" or "disagree"'
            try:
                int(data.get("target"))
            except (TypeError, ValueError):
                return 'expected an integer "target"'
            return None

        data = self._ask_json(self._messages(ctx, task), check)
        stance = Stance.AGREE if data["stance"].lower() == "agree" else Stance.DISAGREE
        target = int(data["target"])
        target_post = next((p for p in pool if p.post_id == target), None)
        return PostIntent(PostKind.REPLY, target, stance, target_post=target_post)

    def generate_content(self, ctx, intent, tools):
        if intent.kind is PostKind.REPLY:
            tp = intent.target_post
            task = self._t(
                "reply",
                stance_verb="agree with" if intent.stance is Stance.AGREE else "disagree with",
                target=intent.target,
                target_author=tp.author if tp else "another participant",
                target_body=tp.body if tp else "",
            )
        else:
            task = self.prompts["new_comment"]
        messages = self._messages(ctx, task)
        trace: list[ToolCall] = []

        can_search = tools is not None and tools.has(ToolId.WEB_SEARCH)
        rounds = 0
        while can_search and rounds < MAX_TOOL_ROUNDS:
            message = self._complete(messages, tools=[_SEARCH_TOOL])
            calls = message.get("tool_calls") or []
            if not calls:
                data = parse_json_object(message.get("content"))
                if data is not None and self._body_problem(ctx, data) is None:
                    return GeneratedContent(data["body"].strip(), tuple(trace))
                break
            rounds += 1
            messages = messages + [{"role": "assistant", "content": message.get("content"), "tool_calls": calls}]
            for call in calls:
                messages.append(self._run_tool(call, tools, trace))

        data = self._ask_json(messages, lambda d: self._body_problem(ctx, d))
        return GeneratedContent(data["body"].strip(), tuple(trace))

    @staticmethod
    def _body_problem(ctx: AgentContext, data: dict) -> str | None:
        body = data.get("body")
        if not isinstance(body, str) or not body.strip():
            return 'expected a non-empty "body"'
        limit = 2 * ctx.persona.response_length[1]
        if len(body.split()) > limit:
            return f"the body exceeds {limit} words"
        return None

    def _run_tool(self, call: dict, tools, trace: list[ToolCall]) -> dict:
        fn = call.get("function", {})
        try:
            args = json.loads(fn.get("arguments") or "{}")
        except ValueError:
            args = {}
        query = str(args.get("query", "")).strip()
        if fn.get("name") != "web_search" or not query:
            content = json.dumps({"error": "unsupported tool call"})
        else:
            results = tools.web_search(query)
            trace.append(ToolCall(ToolId.WEB_SEARCH.value, query, results[0].title if results else "no results"))
            content = json.dumps([r._asdict() for r in results])
        return {"role": "tool", "tool_call_id": call.get("id", ""), "content": content}
