"""Pipeline configuration parsing and serialization.

The config format is a single JSON document:

    {
      "pipeline_id": "...",
      "layers": [["w1", "w2"], ["agg"]],
      "agents": {"w1": {...}, ...},
      "parallelism_limit": 8,
      "timeout_per_call_ms": 30000,
      "retries": 1
    }

Field names are exact; unknown keys anywhere are a hard error. Unset
pipeline-level fields take the documented defaults.
"""

from __future__ import annotations

import json
from typing import Any

from .types import (
    DEFAULT_PARALLELISM_LIMIT,
    DEFAULT_RETRIES,
    DEFAULT_TIMEOUT_SECONDS,
    DEFAULT_TOP_K,
    AgentSpec,
    ConfigError,
    GenerationParams,
    GuardPolicy,
    ModelRef,
    PipelineSpec,
    Role,
)

_TOP_LEVEL_KEYS = {
    "pipeline_id",
    "layers",
    "agents",
    "parallelism_limit",
    "timeout_per_call_ms",
    "retries",
}
_AGENT_KEYS = {
    "role",
    "model",
    "system_prompt",
    "kb_binding",
    "top_k",
    "guard_policy",
    "handler_id",
    "upstream",
}
_MODEL_KEYS = {"backend_id", "model_name", "params"}
_PARAMS_KEYS = {"temperature", "max_output_tokens"}
_GUARD_KEYS = {
    "abstention_enabled",
    "min_retrieval_score",
    "grounding_threshold",
    "abstention_phrases",
}

# Role-appropriate templates used when an agent record omits system_prompt.
DEFAULT_WORKER_PROMPT = (
    "You are a specialized research assistant. Answer the question using only "
    "the provided context passages.\n"
    "Question: {question}\n"
    "Context:\n{context}"
)
DEFAULT_AGGREGATOR_PROMPT = (
    "You are an aggregator. Combine the labeled agent answers below into one "
    "final answer to the question. Discard answers marked as unsupported.\n"
    "Question: {question}\n"
    "Agent answers:\n{upstream}"
)
DEFAULT_PLANNER_PROMPT = (
    "You are a planner. Decompose the question into one sub-question per "
    "agent and reply with a JSON array of objects with keys \"agent_id\" and "
    "\"question\". Agents: {workers}\n"
    "Question: {question}\n"
    "Context:\n{context}"
)

_DEFAULT_PROMPTS = {
    Role.WORKER: DEFAULT_WORKER_PROMPT,
    Role.PLANNER: DEFAULT_PLANNER_PROMPT,
    Role.AGGREGATOR: DEFAULT_AGGREGATOR_PROMPT,
    Role.SUBPROCESS: "",
}


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ConfigError(f"missing required field '{key}' in {where}")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}' in {where}")


def _expect(value: Any, kind: type, where: str) -> Any:
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{where} must be an integer")
    if not isinstance(value, kind):
        raise ConfigError(f"{where} must be {kind.__name__}")
    return value


def _parse_params(raw: Any, where: str) -> GenerationParams:
    _expect(raw, dict, where)
    _check_keys(raw, _PARAMS_KEYS, where)
    temperature = _expect(raw.get("temperature", 0.0), float, f"{where}.temperature")
    max_out = _expect(raw.get("max_output_tokens", 512), int, f"{where}.max_output_tokens")
    if temperature < 0:
        raise ConfigError(f"{where}.temperature must be >= 0")
    if max_out <= 0:
        raise ConfigError(f"{where}.max_output_tokens must be positive")
    return GenerationParams(temperature=temperature, max_output_tokens=max_out)


def _parse_model(raw: Any, where: str) -> ModelRef:
    _expect(raw, dict, where)
    _check_keys(raw, _MODEL_KEYS, where)
    backend_id = _expect(_require(raw, "backend_id", where), str, f"{where}.backend_id")
    model_name = _expect(_require(raw, "model_name", where), str, f"{where}.model_name")
    params = _parse_params(raw.get("params", {}), f"{where}.params")
    return ModelRef(backend_id=backend_id, model_name=model_name, params=params)


def _parse_guard(raw: Any, where: str) -> GuardPolicy:
    _expect(raw, dict, where)
    _check_keys(raw, _GUARD_KEYS, where)
    defaults = GuardPolicy()
    phrases = raw.get("abstention_phrases", list(defaults.abstention_phrases))
    _expect(phrases, list, f"{where}.abstention_phrases")
    for p in phrases:
        _expect(p, str, f"{where}.abstention_phrases entries")
    score = _expect(
        raw.get("min_retrieval_score", defaults.min_retrieval_score),
        float,
        f"{where}.min_retrieval_score",
    )
    threshold = _expect(
        raw.get("grounding_threshold", defaults.grounding_threshold),
        float,
        f"{where}.grounding_threshold",
    )
    if not 0.0 <= score <= 1.0:
        raise ConfigError(f"{where}.min_retrieval_score must be in [0, 1]")
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"{where}.grounding_threshold must be in [0, 1]")
    return GuardPolicy(
        abstention_enabled=_expect(
            raw.get("abstention_enabled", True), bool, f"{where}.abstention_enabled"
        ),
        min_retrieval_score=score,
        grounding_threshold=threshold,
        abstention_phrases=tuple(phrases),
    )


def _parse_agent(agent_id: str, raw: Any) -> AgentSpec:
    where = f"agents.{agent_id}"
    _expect(raw, dict, where)
    _check_keys(raw, _AGENT_KEYS, where)
    role_name = _expect(_require(raw, "role", where), str, f"{where}.role")
    try:
        role = Role(role_name)
    except ValueError:
        raise ConfigError(f"{where}.role must be one of planner/worker/aggregator/subprocess")

    model = None
    if "model" in raw:
        model = _parse_model(raw["model"], f"{where}.model")

    top_k = _expect(raw.get("top_k", DEFAULT_TOP_K), int, f"{where}.top_k")
    if top_k < 0:
        raise ConfigError(f"{where}.top_k must be >= 0")

    system_prompt = raw.get("system_prompt", _DEFAULT_PROMPTS[role])
    _expect(system_prompt, str, f"{where}.system_prompt")

    kb_binding = raw.get("kb_binding")
    if kb_binding is not None:
        _expect(kb_binding, str, f"{where}.kb_binding")

    handler_id = raw.get("handler_id")
    if handler_id is not None:
        _expect(handler_id, str, f"{where}.handler_id")

    upstream = raw.get("upstream", [])
    _expect(upstream, list, f"{where}.upstream")
    for u in upstream:
        _expect(u, str, f"{where}.upstream entries")

    return AgentSpec(
        agent_id=agent_id,
        role=role,
        model=model,
        system_prompt=system_prompt,
        kb_binding=kb_binding,
        top_k=top_k,
        guard_policy=_parse_guard(raw.get("guard_policy", {}), f"{where}.guard_policy"),
        handler_id=handler_id,
        upstream=tuple(upstream),
    )


def parse_pipeline(config_text: str) -> PipelineSpec:
    """Parse a JSON pipeline document into a PipelineSpec with defaults applied.

    Raises ConfigError with a position annotation on malformed JSON, and on
    unknown or missing fields.
    """
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error: {exc.msg}", line=exc.lineno, column=exc.colno)

    _expect(doc, dict, "pipeline config")
    _check_keys(doc, _TOP_LEVEL_KEYS, "pipeline config")

    pipeline_id = _expect(_require(doc, "pipeline_id", "pipeline config"), str, "pipeline_id")
    raw_layers = _expect(_require(doc, "layers", "pipeline config"), list, "layers")
    if len(raw_layers) < 2:
        raise ConfigError("pipeline must have ≥ 2 layers")
    layers: list[tuple[str, ...]] = []
    for i, raw_layer in enumerate(raw_layers):
        _expect(raw_layer, list, f"layers[{i}]")
        if not raw_layer:
            raise ConfigError(f"layers[{i}] must not be empty")
        for a in raw_layer:
            _expect(a, str, f"layers[{i}] entries")
        layers.append(tuple(raw_layer))

    raw_agents = _expect(_require(doc, "agents", "pipeline config"), dict, "agents")
    agents = {aid: _parse_agent(aid, raw) for aid, raw in raw_agents.items()}

    parallelism = _expect(
        doc.get("parallelism_limit", DEFAULT_PARALLELISM_LIMIT), int, "parallelism_limit"
    )
    if parallelism <= 0:
        raise ConfigError("parallelism_limit must be positive")
    timeout_ms = _expect(
        doc.get("timeout_per_call_ms", int(DEFAULT_TIMEOUT_SECONDS * 1000)),
        int,
        "timeout_per_call_ms",
    )
    if timeout_ms <= 0:
        raise ConfigError("timeout_per_call_ms must be positive")
    retries = _expect(doc.get("retries", DEFAULT_RETRIES), int, "retries")
    if retries < 0:
        raise ConfigError("retries must be >= 0")

    return PipelineSpec(
        pipeline_id=pipeline_id,
        layers=tuple(layers),
        agents=agents,
        parallelism_limit=parallelism,
        timeout_per_call=timeout_ms / 1000.0,
        retries=retries,
    )


def serialize_pipeline(spec: PipelineSpec) -> str:
    """Render a PipelineSpec back to its JSON config form.

    ``parse_pipeline(serialize_pipeline(spec))`` equals ``spec``.
    """
    agents: dict[str, Any] = {}
    for aid, agent in spec.agents.items():
        record: dict[str, Any] = {
            "role": agent.role.value,
            "system_prompt": agent.system_prompt,
            "top_k": agent.top_k,
            "guard_policy": {
                "abstention_enabled": agent.guard_policy.abstention_enabled,
                "min_retrieval_score": agent.guard_policy.min_retrieval_score,
                "grounding_threshold": agent.guard_policy.grounding_threshold,
                "abstention_phrases": list(agent.guard_policy.abstention_phrases),
            },
        }
        if agent.model is not None:
            record["model"] = {
                "backend_id": agent.model.backend_id,
                "model_name": agent.model.model_name,
                "params": {
                    "temperature": agent.model.params.temperature,
                    "max_output_tokens": agent.model.params.max_output_tokens,
                },
            }
        if agent.kb_binding is not None:
            record["kb_binding"] = agent.kb_binding
        if agent.handler_id is not None:
            record["handler_id"] = agent.handler_id
        if agent.upstream:
            record["upstream"] = list(agent.upstream)
        agents[aid] = record

    doc = {
        "pipeline_id": spec.pipeline_id,
        "layers": [list(layer) for layer in spec.layers],
        "agents": agents,
        "parallelism_limit": spec.parallelism_limit,
        "timeout_per_call_ms": int(round(spec.timeout_per_call * 1000)),
        "retries": spec.retries,
    }
    return json.dumps(doc, indent=2, sort_keys=False)
