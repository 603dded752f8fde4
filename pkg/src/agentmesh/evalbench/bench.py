"""Latency / effective-context benchmark harness.

Runs each suite configuration N times through the engine, then reduces the
traces into one comparison row per configuration: average end-to-end response
speed, latency penalty relative to the baseline configuration, average
passages considered per run, and context-window improvement relative to the
baseline. Baseline ratios are 1.0 by definition and rendered as an em dash in
the human-readable table. ``max_concurrent_users`` is pass-through metadata
supplied by the suite config (or a separate load test), never measured here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from ..orchestrator.trace import RunTrace


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class BenchConfiguration:
    label: str
    pipeline_id: str
    mode: str = "serial"
    repetitions: int = 5
    backend_overrides: Mapping[str, str] | None = None
    max_concurrent_users: int | None = None


@dataclass(frozen=True)
class BenchSuite:
    question: str
    baseline_label: str
    configurations: tuple[BenchConfiguration, ...]


@dataclass(frozen=True)
class BenchRow:
    label: str
    avg_response_speed: float
    latency_penalty: float
    avg_passages_considered: float
    context_window_improvement: float
    max_concurrent_users: int | None = None


@dataclass(frozen=True)
class BenchReport:
    baseline_label: str
    rows: tuple[BenchRow, ...]


def passages_considered(trace: RunTrace) -> int:
    """Total passages across all nodes of one run: the effective context."""
    return sum(len(node.retrieved) for node in trace.node_outputs)


def measure_run(
    traces_by_label: Mapping[str, Sequence[RunTrace]],
    baseline_label: str,
    users_by_label: Mapping[str, int] | None = None,
) -> BenchReport:
    """Reduce per-configuration traces into the comparison report."""
    if baseline_label not in traces_by_label:
        raise BenchError(f"missing baseline configuration '{baseline_label}'")
    for label, traces in traces_by_label.items():
        if not traces:
            raise BenchError(f"configuration '{label}' has no traces")

    def speed(traces: Sequence[RunTrace]) -> float:
        return sum(t.total_wall_seconds for t in traces) / len(traces)

    def passages(traces: Sequence[RunTrace]) -> float:
        return sum(passages_considered(t) for t in traces) / len(traces)

    baseline_speed = speed(traces_by_label[baseline_label])
    baseline_passages = passages(traces_by_label[baseline_label])
    users_by_label = users_by_label or {}

    rows = []
    for label, traces in traces_by_label.items():
        rows.append(
            BenchRow(
                label=label,
                avg_response_speed=speed(traces),
                latency_penalty=speed(traces) / baseline_speed,
                avg_passages_considered=passages(traces),
                context_window_improvement=passages(traces) / baseline_passages,
                max_concurrent_users=users_by_label.get(label),
            )
        )
    return BenchReport(baseline_label=baseline_label, rows=tuple(rows))


class QueryEngine(Protocol):
    def query(
        self,
        pipeline_id: str,
        question: str,
        mode: str | None = None,
        backend_overrides: Mapping[str, str] | None = None,
    ) -> RunTrace: ...


def run_benchmark(engine: QueryEngine, suite: BenchSuite) -> BenchReport:
    """Execute every configuration of the suite and reduce to a report.

    Any run failure aborts the whole suite; the failing run_id surfaces in
    the raised error.
    """
    traces_by_label: dict[str, list[RunTrace]] = {}
    users_by_label: dict[str, int] = {}
    for config in suite.configurations:
        traces: list[RunTrace] = []
        for _ in range(config.repetitions):
            traces.append(
                engine.query(
                    config.pipeline_id,
                    suite.question,
                    mode=config.mode,
                    backend_overrides=config.backend_overrides,
                )
            )
        traces_by_label[config.label] = traces
        if config.max_concurrent_users is not None:
            users_by_label[config.label] = config.max_concurrent_users
    return measure_run(traces_by_label, suite.baseline_label, users_by_label)


_SUITE_KEYS = {"question", "baseline_label", "configurations"}
_CONFIG_KEYS = {
    "label",
    "pipeline_id",
    "mode",
    "repetitions",
    "backend_overrides",
    "max_concurrent_users",
}


def load_suite(path: str | Path) -> BenchSuite:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = set(doc) - _SUITE_KEYS
    if unknown:
        raise BenchError(f"unknown suite field '{sorted(unknown)[0]}'")
    for key in _SUITE_KEYS:
        if key not in doc:
            raise BenchError(f"suite is missing '{key}'")
    configs = []
    labels = set()
    for raw in doc["configurations"]:
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise BenchError(f"unknown configuration field '{sorted(unknown)[0]}'")
        if "label" not in raw or "pipeline_id" not in raw:
            raise BenchError("every configuration needs 'label' and 'pipeline_id'")
        repetitions = raw.get("repetitions", 5)
        if not isinstance(repetitions, int) or repetitions < 1:
            raise BenchError(f"configuration '{raw['label']}': repetitions must be >= 1")
        mode = raw.get("mode", "serial")
        if mode not in ("serial", "parallel"):
            raise BenchError(f"configuration '{raw['label']}': mode must be serial or parallel")
        if raw["label"] in labels:
            raise BenchError(f"duplicate configuration label '{raw['label']}'")
        labels.add(raw["label"])
        configs.append(
            BenchConfiguration(
                label=raw["label"],
                pipeline_id=raw["pipeline_id"],
                mode=mode,
                repetitions=repetitions,
                backend_overrides=raw.get("backend_overrides"),
                max_concurrent_users=raw.get("max_concurrent_users"),
            )
        )
    if not configs:
        raise BenchError("suite has no configurations")
    if doc["baseline_label"] not in labels:
        raise BenchError(f"baseline_label '{doc['baseline_label']}' is not a configuration")
    return BenchSuite(
        question=doc["question"],
        baseline_label=doc["baseline_label"],
        configurations=tuple(configs),
    )


def report_to_json_dict(report: BenchReport) -> dict:
    return {
        "baseline_label": report.baseline_label,
        "rows": [
            {
                "label": row.label,
                "avg_response_speed": row.avg_response_speed,
                "latency_penalty": row.latency_penalty,
                "avg_passages_considered": row.avg_passages_considered,
                "context_window_improvement": row.context_window_improvement,
                "max_concurrent_users": row.max_concurrent_users,
            }
            for row in report.rows
        ],
    }


def report_to_markdown(report: BenchReport) -> str:
    """Render the comparison table; baseline ratios show as an em dash."""
    header = (
        "| Configuration | Avg Response Speed | Avg Latency Penalty "
        "| Avg Passages Considered | Avg Context Window Improvement "
        "| Max Concurrent Users |"
    )
    divider = "|---|---|---|---|---|---|"
    lines = [header, divider]
    for row in report.rows:
        is_baseline = row.label == report.baseline_label
        penalty = "—" if is_baseline else f"{row.latency_penalty:.2f}x"
        improvement = "—" if is_baseline else f"{row.context_window_improvement:.2f}x"
        users = "—" if row.max_concurrent_users is None else str(row.max_concurrent_users)
        lines.append(
            f"| {row.label} | {row.avg_response_speed:.4f}s | {penalty} "
            f"| {row.avg_passages_considered:g} | {improvement} | {users} |"
        )
    return "\n".join(lines)
