import pytest

from delibsim.agent import ScriptedAgent
from delibsim.config import build_agents, build_search, load_preset
from delibsim.core import ActorConfig, Archetype, HistoryScope, Persona, RandomSource
from delibsim.platform import InMemoryPlatform
from delibsim.platform.stub_server import StubPlatformServer
from delibsim.scheduler import SimulationRun, run_simulation


def make_actor(actor_id, archetype=Archetype.CASUAL_USER, *, lambda_post=1.0, lambda_action=1.0,
               p_reply=0.5, theta_action=0.5, m=3, tools=(), scope=HistoryScope.FULL,
               beliefs=("Cooling centres help during heat waves",), length=(10, 20)):
    persona = Persona(
        actor_name=actor_id.replace("_", " ").title(),
        archetype=archetype,
        biography=f"{actor_id} biography",
        tone="plain",
        content_style="direct",
        response_length=length,
        history_scope=scope,
        core_beliefs=beliefs,
    )
    return ActorConfig(actor_id, persona, lambda_post, lambda_action, p_reply, theta_action, m, tools)


@pytest.fixture
def toy_actors():
    return (
        make_actor("alice", Archetype.CASUAL_USER, lambda_post=1.0, lambda_action=1.5, p_reply=0.4,
                   theta_action=0.3, scope=HistoryScope.RECENT_ONLY),
        make_actor("bob", Archetype.EXPERT, lambda_post=0.6, lambda_action=0.8, p_reply=0.6,
                   theta_action=0.5, tools=("WebSearch",), beliefs=("Heat mortality falls with early warning",),
                   length=(50, 100)),
        make_actor("carol", Archetype.SKEPTIC, lambda_post=0.8, lambda_action=1.2, p_reply=0.75,
                   theta_action=0.4, beliefs=("Infrastructure costs need clear numbers",), length=(30, 50)),
    )


def run_scripted(actors, horizon, seed, *, mode="ExponentialRate", log=None, platform=None, **kw):
    run = SimulationRun(tuple(actors), horizon, seed, mode, **kw)
    agents = {a.actor_id: ScriptedAgent() for a in actors}
    return run_simulation(run, agents, platform or InMemoryPlatform(), RandomSource(seed, log=log))


@pytest.fixture(scope="session")
def preset():
    return load_preset()


def run_preset(cfg, seed, platform=None):
    c = cfg.with_overrides(seed=seed)
    return run_simulation(c.run, build_agents(c), platform or InMemoryPlatform(), RandomSource(seed),
                          search=build_search(c))


@pytest.fixture
def stub_platform():
    with StubPlatformServer() as server:
        yield server


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
