from .base import (
    BackendError,
    BackendTimeoutError,
    CompletionRequest,
    CompletionResult,
    InvalidRequestError,
    RemoteStatusError,
    TransportFailureError,
    UnscriptedRequestError,
    estimate_tokens,
    fingerprint,
)
from .mock import MockBackend, MockScript, load_mock_script, script_key
from .openai_http import OpenAIChatBackend

__all__ = [
    "BackendError",
    "BackendTimeoutError",
    "CompletionRequest",
    "CompletionResult",
    "InvalidRequestError",
    "MockBackend",
    "MockScript",
    "OpenAIChatBackend",
    "RemoteStatusError",
    "TransportFailureError",
    "UnscriptedRequestError",
    "estimate_tokens",
    "fingerprint",
    "load_mock_script",
    "script_key",
]
