import json
from pathlib import Path

import pytest

from delibsim.agent import (
    AgentContentError,
    AgentContext,
    AgentError,
    AgentTransportError,
    ChatCompletionAgent,
    PostIntent,
    ScriptedAgent,
    VoteDecision,
    load_affinity,
    validate_reply_intent,
    validate_vote_decisions,
)
from delibsim.agent.http import parse_json_object
from delibsim.agent.stub_server import RecordedChatServer, completion
from delibsim.core import Archetype, Post, PostKind, Stance, VoteDirection
from delibsim.platform import InMemoryPlatform, ToolSuite

from conftest import make_actor

FIXTURES = Path(__file__).parent / "fixtures"


def ctx_for(actor, posts=(), roster=None, own=()):
    return AgentContext(actor.actor_id, actor.persona, tuple(posts), (), tuple(own), actor.tools,
                        "Extreme weather", roster or {})


def posts_by(*authors, start=1):
    return [Post(start + i, a, float(i), f"post {start + i} by {a} about cooling")
            for i, a in enumerate(authors)]


@pytest.fixture
def expert():
    return make_actor("expert", Archetype.EXPERT, tools=("WebSearch",), length=(50, 100),
                      beliefs=("Heat mortality can be reduced through early warning systems",))


@pytest.fixture
def casual():
    return make_actor("casual", Archetype.CASUAL_USER, beliefs=("Cooling centres should stay open",))


# scripted backend

def test_scripted_candidates_bounded_by_pool(casual):
    pool = posts_by("x", "y")
    assert len(ScriptedAgent().select_vote_candidates(ctx_for(casual), pool, 3)) == 2


def test_scripted_candidates_are_newest(casual):
    pool = posts_by("x", "y", "z", "x", "y")
    agent = ScriptedAgent()
    picks = agent.select_vote_candidates(ctx_for(casual), pool, 3)
    oracle = sorted((p.post_id for p in pool), reverse=True)[:3]
    assert [d.target for d in picks] == oracle
    assert picks == agent.select_vote_candidates(ctx_for(casual), pool, 3)


def test_scripted_candidates_empty_pool(casual):
    assert ScriptedAgent().select_vote_candidates(ctx_for(casual), [], 3) == []


def test_scripted_vote_direction_follows_belief_keywords(casual):
    pool = [Post(1, "x", 0.0, "Cooling centres saved my neighbour"), Post(2, "y", 1.0, "Taxes are too high")]
    directions = {d.target: d.direction for d in ScriptedAgent().select_vote_candidates(ctx_for(casual), pool, 3)}
    assert directions == {1: VoteDirection.UP, 2: VoteDirection.DOWN}


def test_scripted_reply_targets_most_recent():
    carol = make_actor("carol", Archetype.SKEPTIC)
    pool = [Post(3, "alice", 0.0, "a"), Post(7, "bob", 1.0, "b")]
    roster = {"alice": Archetype.CASUAL_USER, "bob": Archetype.EXPERT}
    intent = ScriptedAgent().select_reply_target(ctx_for(carol, roster=roster), pool)
    assert intent.kind is PostKind.REPLY and intent.target == max(p.post_id for p in pool) == 7
    # Skeptic agrees with Experts in the shipped affinity table
    assert intent.stance is Stance.AGREE


def test_scripted_reply_singleton_and_disagreement(casual):
    pool = [Post(4, "sk", 0.0, "numbers please")]
    intent = ScriptedAgent().select_reply_target(ctx_for(casual, roster={"sk": Archetype.SKEPTIC}), pool)
    assert (intent.target, intent.stance) == (4, Stance.DISAGREE)


def test_scripted_reply_rejects_pool_of_own_posts(casual):
    with pytest.raises(ValueError):
        ScriptedAgent().select_reply_target(ctx_for(casual), [Post(1, "casual", 0.0, "mine")])


def test_affinity_table_is_data():
    table = load_affinity()
    assert set(table) == set(Archetype)
    assert table[Archetype.SKEPTIC] == {Archetype.EXPERT}


def test_scripted_expert_body_length_and_search(expert):
    tools = ToolSuite(InMemoryPlatform(), "expert", expert.tools)
    agent = ScriptedAgent()
    for n_visible in range(0, 30):
        ctx = ctx_for(expert, posts_by(*["a"] * n_visible))
        out = agent.generate_content(ctx, PostIntent(PostKind.NEW_COMMENT), tools)
        assert 50 <= len(out.body.split()) <= 100
    assert out.tool_trace and out.tool_trace[0].tool == "WebSearch"
    assert "heat mortality" in out.tool_trace[0].query.lower()


@pytest.mark.parametrize("length", [(10, 20), (20, 30), (30, 50), (1, 1), (7, 7)])
def test_scripted_body_length_within_persona_range(length):
    actor = make_actor("a", length=length)
    target = Post(9, "b", 0.0, "some target text here")
    for k in range(25):
        ctx = ctx_for(actor, posts_by(*["b"] * k))
        for intent in (PostIntent(PostKind.NEW_COMMENT), PostIntent(PostKind.REPLY, 9, Stance.AGREE, target)):
            body = ScriptedAgent().generate_content(ctx, intent, None).body
            assert length[0] <= len(body.split()) <= length[1]


def test_scripted_content_is_deterministic(expert):
    tools = ToolSuite(InMemoryPlatform(), "expert", expert.tools)
    ctx = ctx_for(expert, posts_by("a", "b"))
    intent = PostIntent(PostKind.REPLY, 2, Stance.DISAGREE, posts_by("a", "b")[1])
    assert ScriptedAgent().generate_content(ctx, intent, tools) == ScriptedAgent().generate_content(ctx, intent, tools)


def test_scripted_without_search_tool_makes_no_calls(casual):
    tools = ToolSuite(InMemoryPlatform(), "casual", ())
    out = ScriptedAgent().generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), tools)
    assert out.tool_trace == ()


# validators shared by all backends

def test_validate_vote_decisions():
    pool = posts_by("x", "y", "z")
    decisions = [VoteDecision(1, "Up"), VoteDecision(1, "Down"), VoteDecision(99, "Up"),
                 VoteDecision(2, "Up"), VoteDecision(3, "Down")]
    kept, warnings = validate_vote_decisions(decisions, pool, 2)
    assert [d.target for d in kept] == [1, 2]
    assert len(warnings) == 3


def test_validate_reply_intent():
    pool = posts_by("x")
    ok = validate_reply_intent(PostIntent(PostKind.REPLY, 1, Stance.AGREE), pool)
    assert ok.target_post == pool[0]
    with pytest.raises(AgentContentError):
        validate_reply_intent(PostIntent(PostKind.REPLY, 5, Stance.AGREE), pool)
    with pytest.raises(AgentContentError):
        validate_reply_intent(PostIntent(PostKind.REPLY, 1), pool)


def test_post_intent_invariant():
    with pytest.raises(ValueError):
        PostIntent(PostKind.REPLY)
    with pytest.raises(ValueError):
        PostIntent(PostKind.NEW_COMMENT, target=3)


# chat-completion backend against recorded stubs

@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("CHORUS_API_KEY", "test-key")


def chat_agent(url, **kw):
    kw.setdefault("backoff", 0)
    return ChatCompletionAgent(url, "recorded-model", **kw)


def test_chat_backend_reproduces_fixture(api_key, casual):
    fixture = json.loads((FIXTURES / "chat_recorded.json").read_text())
    expected = json.loads(fixture["responses"][0]["choices"][0]["message"]["content"])["body"]
    with RecordedChatServer.from_fixture(FIXTURES / "chat_recorded.json") as server:
        out = chat_agent(server.url).generate_content(ctx_for(casual, posts_by("x")),
                                                      PostIntent(PostKind.NEW_COMMENT), None)
        request = server.requests[0]
        headers = server.headers[0]
    assert out.body == expected
    assert out.tool_trace == ()
    assert headers["Authorization"] == "Bearer test-key"
    assert request["model"] == "recorded-model"
    assert [m["role"] for m in request["messages"]] == ["system", "user"]
    assert "Casual" in request["messages"][0]["content"]
    assert "Cooling centres should stay open" in request["messages"][0]["content"]
    assert "[#1] x: post 1 by x about cooling" in request["messages"][1]["content"]
    assert "tools" not in request


def test_chat_backend_tool_round_trip(api_key, expert):
    tools = ToolSuite(InMemoryPlatform(), "expert", expert.tools)
    with RecordedChatServer.from_fixture(FIXTURES / "chat_tool_roundtrip.json") as server:
        out = chat_agent(server.url).generate_content(ctx_for(expert), PostIntent(PostKind.NEW_COMMENT), tools)
        reqs = server.requests
    assert out.body.startswith("Excess deaths in heatwaves")
    assert [(t.tool, t.query) for t in out.tool_trace] == [("WebSearch", "heat mortality")]
    assert reqs[0]["tools"][0]["function"]["name"] == "web_search"
    tool_msg = reqs[1]["messages"][-1]
    assert tool_msg["role"] == "tool" and tool_msg["tool_call_id"] == "call_1"
    assert "Heat-related deaths" in tool_msg["content"]


def test_chat_backend_caps_tool_rounds(api_key, expert):
    call = {"id": "c", "type": "function", "function": {"name": "web_search", "arguments": '{"query": "flood"}'}}
    responses = [completion(tool_calls=[call])] * 3 + [completion('{"body": "done with searching now"}')]
    tools = ToolSuite(InMemoryPlatform(), "expert", expert.tools)
    with RecordedChatServer(responses) as server:
        out = chat_agent(server.url).generate_content(ctx_for(expert), PostIntent(PostKind.NEW_COMMENT), tools)
        reqs = server.requests
    assert len(out.tool_trace) == 2
    assert "tools" in reqs[0] and "tools" in reqs[1] and "tools" not in reqs[2]


def test_chat_backend_reformat_retry(api_key, casual):
    responses = [completion("Sure! Here is my comment."), completion('{"body": "Fixed answer."}')]
    with RecordedChatServer(responses) as server:
        out = chat_agent(server.url).generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), None)
        second = server.requests[1]["messages"]
    assert out.body == "Fixed answer."
    assert second[-2] == {"role": "assistant", "content": "Sure! Here is my comment."}
    assert "not usable" in second[-1]["content"]


def test_chat_backend_gives_up_after_one_retry(api_key, casual):
    with RecordedChatServer([completion('{"body": ""}')]) as server:
        with pytest.raises(AgentContentError):
            chat_agent(server.url).generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), None)
        assert len(server.requests) == 2


def test_chat_backend_rejects_overlong_body(api_key, casual):
    long_body = " ".join(["word"] * 200)
    with RecordedChatServer([completion(json.dumps({"body": long_body}))]) as server:
        with pytest.raises(AgentContentError, match="exceeds"):
            chat_agent(server.url).generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), None)


def test_chat_backend_timeout_is_transport_error(api_key, casual):
    with RecordedChatServer([{"delay": 1.0, **completion('{"body": "late"}')}]) as server:
        agent = chat_agent(server.url, timeout=0.2, retries=1)
        with pytest.raises(AgentTransportError):
            agent.generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), None)


def test_chat_backend_retries_server_errors(api_key, casual):
    responses = [{"status": 503, "body": {"error": "busy"}}, completion('{"body": "after retry"}')]
    with RecordedChatServer(responses) as server:
        out = chat_agent(server.url, retries=2).generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), None)
    assert out.body == "after retry"


def test_chat_backend_client_error_not_retried(api_key, casual):
    with RecordedChatServer([{"status": 401, "body": {"error": "bad key"}}]) as server:
        with pytest.raises(AgentTransportError, match="401"):
            chat_agent(server.url).generate_content(ctx_for(casual), PostIntent(PostKind.NEW_COMMENT), None)
        assert len(server.requests) == 1


def test_chat_backend_vote_and_reply_selection(api_key, casual):
    pool = posts_by("x", "y", "z")
    responses = [
        completion('{"votes": [{"target": 3, "direction": "up", "rationale": "agree"}, {"target": 1, "direction": "DOWN"}]}'),
        completion('{"target": 2, "stance": "disagree"}'),
    ]
    with RecordedChatServer(responses) as server:
        agent = chat_agent(server.url)
        votes = agent.select_vote_candidates(ctx_for(casual), pool, 3)
        intent = agent.select_reply_target(ctx_for(casual), pool)
        assert "Choose up to 3" in server.requests[0]["messages"][1]["content"]
    assert votes == [VoteDecision(3, VoteDirection.UP, "agree"), VoteDecision(1, VoteDirection.DOWN)]
    assert (intent.target, intent.stance, intent.target_post) == (2, Stance.DISAGREE, pool[1])


def test_chat_backend_requires_api_key(monkeypatch):
    monkeypatch.delenv("CHORUS_API_KEY", raising=False)
    with pytest.raises(AgentError, match="CHORUS_API_KEY"):
        ChatCompletionAgent("http://127.0.0.1:9/v1", "m")
    monkeypatch.setenv("OTHER_KEY", "k")
    ChatCompletionAgent("http://127.0.0.1:9/v1", "m", api_key_env="OTHER_KEY")


@pytest.mark.parametrize("text,expected", [
    ('{"body": "x"}', {"body": "x"}),
    ('```json\n{"body": "x"}\n```', {"body": "x"}),
    ('Here you go: {"body": "x"} thanks', {"body": "x"}),
    ("[1, 2]", None),
    ("no json", None),
    ("", None),
])
def test_parse_json_object(text, expected):
    assert parse_json_object(text) == expected


def test_chat_backend_max_visible_posts(api_key, casual):
    pool = posts_by("x", "y", "z", "x")
    with RecordedChatServer([completion('{"body": "short"}')]) as server:
        chat_agent(server.url, max_visible_posts=2).generate_content(
            ctx_for(casual, pool), PostIntent(PostKind.NEW_COMMENT), None)
        user = server.requests[0]["messages"][1]["content"]
    assert "[#3]" in user and "[#4]" in user
    assert "[#1]" not in user and "[#2]" not in user
    with pytest.raises(ValueError):
        ChatCompletionAgent("http://127.0.0.1:9/v1", "m", max_visible_posts=0)
