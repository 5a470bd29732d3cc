from .errors import (
    DuplicateVoteError,
    PlatformError,
    PlatformTransportError,
    PlatformValidationError,
    PublishError,
    ToolAuthorizationError,
)
from .http import HttpPlatform
from .memory import InMemoryPlatform
from .tools import BASE_TOOLS, FixtureSearch, HttpSearch, SearchResult, ToolId, ToolSuite

__all__ = [
    "BASE_TOOLS",
    "DuplicateVoteError",
    "FixtureSearch",
    "HttpPlatform",
    "HttpSearch",
    "InMemoryPlatform",
    "PlatformError",
    "PlatformTransportError",
    "PlatformValidationError",
    "PublishError",
    "SearchResult",
    "ToolAuthorizationError",
    "ToolId",
    "ToolSuite",
]
