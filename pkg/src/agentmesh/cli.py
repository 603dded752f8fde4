"""Command-line interface: a thin client over the engine facade.

Subcommands: ``validate``, ``ingest``, ``query``, ``bench``, ``serve``.
Exit codes: 0 success, 1 configuration/validation error, 2 runtime failure.
Errors go to stderr as one machine-readable JSON object per failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends.base import BackendError
from .core.config import parse_pipeline
from .core.types import ConfigError, PipelineValidationError, Role
from .core.validate import validate_pipeline
from .engine import Engine, EngineConfig, EngineConfigError, UnknownPipelineError
from .evalbench.bench import BenchError, load_suite, report_to_json_dict, report_to_markdown, run_benchmark
from .orchestrator.trace import RunFailureError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _fail(code: int, error: str, detail: str) -> int:
    print(json.dumps({"error": error, "detail": detail}), file=sys.stderr)
    return code


def _build_engine(config_path: str, require_pipelines: bool = True) -> Engine:
    return Engine(EngineConfig.from_file(config_path), require_pipelines=require_pipelines)


def _cmd_validate(args: argparse.Namespace) -> int:
    engine = _build_engine(args.config, require_pipelines=False)
    spec = parse_pipeline(Path(args.pipeline).read_text(encoding="utf-8"))
    plan = validate_pipeline(spec, engine.registry)
    print(f"pipeline {spec.pipeline_id}: OK")
    print(f"  layers: {' -> '.join('[' + ', '.join(layer) + ']' for layer in spec.layers)}")
    print(f"  agents: {len(spec.agents)}")
    for agent_id, upstream in plan.edge_map.items():
        print(f"  {agent_id} <- {', '.join(upstream)}")
    return EXIT_OK


def _cmd_ingest(args: argparse.Namespace) -> int:
    engine = _build_engine(args.config, require_pipelines=False)
    report = engine.ingest_directory(args.kb_id, args.directory)
    for doc_id in sorted(report):
        print(f"{doc_id}: {report[doc_id]} chunks")
    print(f"kb {args.kb_id}: {sum(report.values())} chunks from {len(report)} documents")
    return EXIT_OK


def _cmd_query(args: argparse.Namespace) -> int:
    engine = _build_engine(args.config)
    trace = engine.query(args.pipeline_id, args.question, mode=args.mode)
    if args.trace:
        for node in trace.node_outputs:
            if node.role is not Role.AGGREGATOR:
                print(f"Agent {node.agent_id}: {node.answer}")
        print(f"Final: {trace.final_answer}")
    else:
        print(trace.final_answer)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    engine = _build_engine(args.config)
    suite = load_suite(args.suite)
    report = run_benchmark(engine, suite)
    print(report_to_markdown(report))
    if args.json:
        Path(args.json).write_text(
            json.dumps(report_to_json_dict(report), indent=2), encoding="utf-8"
        )
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service.app import serve

    engine = _build_engine(args.config)
    serve(engine)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agentmesh")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a pipeline config")
    p_validate.add_argument("pipeline")
    p_validate.add_argument("--config", required=True)
    p_validate.set_defaults(fn=_cmd_validate)

    p_ingest = sub.add_parser("ingest", help="ingest a directory of .txt files into a KB")
    p_ingest.add_argument("kb_id")
    p_ingest.add_argument("directory")
    p_ingest.add_argument("--config", required=True)
    p_ingest.set_defaults(fn=_cmd_ingest)

    p_query = sub.add_parser("query", help="run one question through a pipeline")
    p_query.add_argument("pipeline_id")
    p_query.add_argument("question")
    p_query.add_argument("--mode", choices=("serial", "parallel"), default=None)
    p_query.add_argument("--trace", action="store_true", help="print every agent's answer")
    p_query.add_argument("--config", required=True)
    p_query.set_defaults(fn=_cmd_query)

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("suite")
    p_bench.add_argument("--json", default=None, help="also write the report as JSON")
    p_bench.add_argument("--config", required=True)
    p_bench.set_defaults(fn=_cmd_bench)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, PipelineValidationError, EngineConfigError, BenchError) as exc:
        return _fail(EXIT_CONFIG, "config_error", str(exc))
    except UnknownPipelineError as exc:
        return _fail(EXIT_CONFIG, "unknown_pipeline", str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, "missing_file", str(exc))
    except RunFailureError as exc:
        return _fail(EXIT_RUNTIME, "node_failed", str(exc))
    except (BackendError, OSError, ValueError) as exc:
        return _fail(EXIT_RUNTIME, "runtime_error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
