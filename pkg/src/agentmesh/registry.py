"""Registry of backends, knowledge bases, and subprocess handlers.

Plan validation resolves every reference against a registry; the registry is
frozen once plans are built, so runs never race registration.
"""

from __future__ import annotations

from typing import Any, Callable


# Subprocess handlers share the agent contract: they receive the assigned
# question, the retrieved passages, and upstream node outputs, and return
# the node's answer text.
HandlerFn = Callable[..., str]


class Registry:
    def __init__(self):
        self.backends: dict[str, Any] = {}
        self.kbs: dict[str, Any] = {}
        self.handlers: dict[str, HandlerFn] = {}

    def register_backend(self, backend_id: str, backend: Any) -> None:
        self.backends[backend_id] = backend

    def register_kb(self, kb: Any) -> None:
        self.kbs[kb.kb_id] = kb

    def register_handler(self, handler_id: str, fn: HandlerFn) -> None:
        self.handlers[handler_id] = fn
