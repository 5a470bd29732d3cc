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
    validate_content,
    validate_reply_intent,
    validate_vote_decisions,
)
from .http import ChatCompletionAgent
from .scripted import ScriptedAgent, load_affinity

__all__ = [
    "AgentBackend",
    "AgentBackendKind",
    "AgentContentError",
    "AgentContext",
    "AgentError",
    "AgentTransportError",
    "ChatCompletionAgent",
    "GeneratedContent",
    "PostIntent",
    "ScriptedAgent",
    "VoteDecision",
    "load_affinity",
    "validate_content",
    "validate_reply_intent",
    "validate_vote_decisions",
]
