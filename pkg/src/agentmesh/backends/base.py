"""Uniform model-invocation contract shared by all backends."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from ..core.types import GenerationParams


class BackendError(Exception):
    pass


class InvalidRequestError(BackendError):
    """The request violates a precondition (e.g. empty user message)."""


class BackendTimeoutError(BackendError):
    def __init__(self, backend_id: str, timeout: float):
        super().__init__(f"backend '{backend_id}' timed out after {timeout:.3f}s")
        self.backend_id = backend_id
        self.timeout = timeout


class TransportFailureError(BackendError):
    """Transport-level failure that persisted through all retries."""


class RemoteStatusError(BackendError):
    """Non-success HTTP status from the remote endpoint, body attached."""

    def __init__(self, backend_id: str, status_code: int, body: str):
        super().__init__(f"backend '{backend_id}' returned status {status_code}: {body[:500]}")
        self.status_code = status_code
        self.body = body


class UnscriptedRequestError(BackendError):
    """Canned mock received a request it has no scripted response for."""

    def __init__(self, agent_id: str, request_fingerprint: str):
        super().__init__(
            f"no scripted response for agent '{agent_id}' "
            f"with fingerprint {request_fingerprint}"
        )
        self.agent_id = agent_id
        self.request_fingerprint = request_fingerprint


@dataclass(frozen=True)
class CompletionRequest:
    system_prompt: str
    user_message: str
    params: GenerationParams = field(default_factory=GenerationParams)


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int
    output_tokens: int
    latency: float
    backend_id: str


def fingerprint(req: CompletionRequest) -> str:
    """Stable content hash of (system_prompt, user_message).

    Identical requests produce identical fingerprints across runs and
    platforms; generation params are deliberately excluded.
    """
    digest = hashlib.sha256()
    for part in (req.system_prompt, req.user_message):
        data = part.encode("utf-8")
        digest.update(len(data).to_bytes(8, "big"))
        digest.update(data)
    return digest.hexdigest()[:16]


def estimate_tokens(text: str) -> int:
    """Character-count estimate used when no tokenizer is available."""
    return math.ceil(len(text) / 4)
