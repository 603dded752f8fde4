"""Deterministic scripted backend for tests and benchmarks.

Two modes:

* ``echo_context``: a pure function of the request. Returns the first
  sentence of each context passage (lines shaped ``[doc#pos] text``) in rank
  order; if the prompt carries no context lines, the first sentence of each
  labeled upstream answer (``Agent <id>: text``); failing both, the first
  sentence of the user message. Output is truncated to the request's
  max_output_tokens (4 chars per token).
* ``canned``: looks up ``"<agent_id>:<fingerprint>"`` in the script map and
  fails with a distinguishable error when the request was never scripted.

``fixed_latency`` is slept on every call, so wall-clock assertions against
scheduler arithmetic stay meaningful.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .base import (
    BackendTimeoutError,
    CompletionRequest,
    CompletionResult,
    InvalidRequestError,
    UnscriptedRequestError,
    estimate_tokens,
    fingerprint,
)

_CONTEXT_LINE = re.compile(r"^\[[^\]]+\]\s*(.+)$")
_UPSTREAM_LINE = re.compile(r"^Agent [^:]+:\s*(.+)$")
_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")


def first_sentence(text: str) -> str:
    text = text.strip()
    match = _SENTENCE_END.search(text)
    if match:
        return text[: match.end()]
    return text


def script_key(agent_id: str, request_fingerprint: str) -> str:
    return f"{agent_id}:{request_fingerprint}"


@dataclass(frozen=True)
class MockScript:
    mode: str = "echo_context"  # "echo_context" | "canned"
    canned_responses: Mapping[str, str] = field(default_factory=dict)
    fixed_latency: float = 0.0  # seconds

    def __post_init__(self):
        if self.mode not in ("echo_context", "canned"):
            raise ValueError(f"unknown mock mode '{self.mode}'")


def load_mock_script(path: str | Path, fixed_latency: float = 0.0) -> MockScript:
    """Load a canned script file: a JSON map "agent_id:fingerprint" -> text."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("mock script file must be a JSON object")
    return MockScript(mode="canned", canned_responses=dict(data), fixed_latency=fixed_latency)


class MockBackend:
    def __init__(self, backend_id: str, script: MockScript):
        self.backend_id = backend_id
        self.script = script

    def _echo_text(self, req: CompletionRequest) -> str:
        lines = (req.system_prompt + "\n" + req.user_message).splitlines()
        context_payloads = [m.group(1) for m in map(_CONTEXT_LINE.match, lines) if m]
        if not context_payloads:
            context_payloads = [m.group(1) for m in map(_UPSTREAM_LINE.match, lines) if m]
        if context_payloads:
            text = " ".join(first_sentence(p) for p in context_payloads)
        else:
            text = first_sentence(req.user_message)
        return text[: req.params.max_output_tokens * 4]

    def invoke(
        self,
        req: CompletionRequest,
        *,
        timeout: float | None = None,
        retries: int = 0,
        agent_id: str = "",
        model: str = "",
    ) -> CompletionResult:
        if not req.user_message:
            raise InvalidRequestError("user_message must be non-empty")

        start = time.monotonic()
        if timeout is not None and self.script.fixed_latency > timeout:
            time.sleep(timeout)
            raise BackendTimeoutError(self.backend_id, timeout)
        if self.script.fixed_latency > 0:
            time.sleep(self.script.fixed_latency)

        if self.script.mode == "canned":
            key = script_key(agent_id, fingerprint(req))
            if key not in self.script.canned_responses:
                raise UnscriptedRequestError(agent_id, fingerprint(req))
            text = self.script.canned_responses[key]
        else:
            text = self._echo_text(req)

        latency = time.monotonic() - start
        return CompletionResult(
            text=text,
            prompt_tokens=estimate_tokens(req.system_prompt + req.user_message),
            output_tokens=estimate_tokens(text),
            latency=latency,
            backend_id=self.backend_id,
        )
