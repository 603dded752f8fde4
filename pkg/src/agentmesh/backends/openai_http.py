"""Chat-completion HTTP client speaking the OpenAI-compatible wire protocol.

POSTs ``{base_url}/v1/chat/completions`` with a ``messages`` array and reads
``choices[0].message.content``. Token counts come from the remote ``usage``
object when present, else from the character estimate. Transport failures are
retried; timeouts and remote error statuses are not.
"""

from __future__ import annotations

import os
import time

import httpx

from .base import (
    BackendTimeoutError,
    CompletionRequest,
    CompletionResult,
    InvalidRequestError,
    RemoteStatusError,
    TransportFailureError,
    estimate_tokens,
)


class OpenAIChatBackend:
    def __init__(
        self,
        backend_id: str,
        base_url: str,
        api_key_env: str | None = None,
        default_model: str = "",
        client: httpx.Client | None = None,
    ):
        self.backend_id = backend_id
        self.base_url = base_url.rstrip("/")
        self.default_model = default_model
        self._api_key = os.environ.get(api_key_env, "") if api_key_env else ""
        self._client = client or httpx.Client()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

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

        messages = []
        if req.system_prompt:
            messages.append({"role": "system", "content": req.system_prompt})
        messages.append({"role": "user", "content": req.user_message})
        payload = {
            "model": model or self.default_model,
            "messages": messages,
            "temperature": req.params.temperature,
            "max_tokens": req.params.max_output_tokens,
        }

        url = f"{self.base_url}/v1/chat/completions"
        start = time.monotonic()
        last_error: Exception | None = None
        for _ in range(retries + 1):
            try:
                response = self._client.post(
                    url, json=payload, headers=self._headers(), timeout=timeout
                )
                break
            except httpx.TimeoutException:
                raise BackendTimeoutError(self.backend_id, timeout or 0.0)
            except httpx.TransportError as exc:
                last_error = exc
        else:
            raise TransportFailureError(
                f"backend '{self.backend_id}' failed after {retries + 1} attempts: {last_error}"
            )

        if response.status_code != 200:
            raise RemoteStatusError(self.backend_id, response.status_code, response.text)

        body = response.json()
        text = body["choices"][0]["message"]["content"]
        usage = body.get("usage") or {}
        latency = time.monotonic() - start
        return CompletionResult(
            text=text,
            prompt_tokens=usage.get(
                "prompt_tokens", estimate_tokens(req.system_prompt + req.user_message)
            ),
            output_tokens=usage.get("completion_tokens", estimate_tokens(text)),
            latency=latency,
            backend_id=self.backend_id,
        )
