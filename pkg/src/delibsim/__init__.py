"""Discrete-event simulation of persona-driven actors producing synthetic deliberation data."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ActorConfig,
    Archetype,
    ConfigError,
    HistoryScope,
    Persona,
    Post,
    PostKind,
    RandomSource,
    SharedHistory,
    Stance,
    VoteDirection,
    VoteRecord,
    draw_uniform,
)
from .scheduler import InterArrivalMode, SimulationResult, SimulationRun, run_simulation  # noqa: E402

__all__ = [
    "ActorConfig",
    "Archetype",
    "ConfigError",
    "HistoryScope",
    "InterArrivalMode",
    "Persona",
    "Post",
    "PostKind",
    "RandomSource",
    "SharedHistory",
    "SimulationResult",
    "SimulationRun",
    "Stance",
    "VoteDirection",
    "VoteRecord",
    "__version__",
    "draw_uniform",
    "run_simulation",
]
