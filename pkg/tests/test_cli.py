import json

import pytest

from agentmesh.cli import main
from agentmesh.evalbench.bench import BenchReport, BenchRow, report_to_markdown

from conftest import build_engine, fanout_pipeline_config, make_text

QUESTION = "What drove subscription revenue growth?"


@pytest.fixture
def env(tmp_path, rng):
    backends = {
        "echo": {"type": "mock_echo", "fixed_latency_ms": 0},
        "instant": {"type": "mock_echo", "fixed_latency_ms": 0},
    }
    kbs = {
        kb_id: [(f"{kb_id}_doc{i}", make_text(2600, rng)) for i in range(2)]
        for kb_id in ("kb_a", "kb_b", "kb_c")
    }
    fanout = fanout_pipeline_config("fanout", 3, "echo", "echo", ["kb_a", "kb_b", "kb_c"], top_k=4)
    baseline = fanout_pipeline_config("baseline", 1, "echo", "instant", ["kb_a"], top_k=4)
    build_engine(tmp_path, backends, [fanout, baseline], kbs=kbs)
    return tmp_path


def config_arg(env):
    return ["--config", str(env / "engine.json")]


def test_validate_ok(env, capsys):
    code = main(["validate", str(env / "fanout.pipeline.json"), *config_arg(env)])
    out = capsys.readouterr().out
    assert code == 0
    assert "pipeline fanout: OK" in out
    assert "agg <- w1, w2, w3" in out


def test_validate_failure_exits_1_with_json_stderr(env, capsys):
    broken = env / "broken.json"
    doc = json.loads((env / "fanout.pipeline.json").read_text(encoding="utf-8"))
    doc["layers"] = [["w1", "w2", "w3"], ["w1"]]
    broken.write_text(json.dumps(doc), encoding="utf-8")
    code = main(["validate", str(broken), *config_arg(env)])
    captured = capsys.readouterr()
    assert code == 1
    error = json.loads(captured.err.strip())
    assert error["error"] == "config_error"
    assert "duplicate" in error["detail"]


def test_ingest_directory(env, tmp_path_factory, capsys, rng):
    docs_dir = tmp_path_factory.mktemp("docs")
    (docs_dir / "a.txt").write_text(make_text(2500, rng), encoding="utf-8")
    (docs_dir / "b.txt").write_text(make_text(900, rng), encoding="utf-8")
    code = main(["ingest", "kb_fresh", str(docs_dir), *config_arg(env)])
    out = capsys.readouterr().out
    assert code == 0
    assert "a.txt: 4 chunks" in out
    assert "b.txt: 2 chunks" in out
    assert "kb_fresh: 6 chunks from 2 documents" in out


def test_query_plain_prints_final_answer(env, capsys):
    code = main(["query", "fanout", QUESTION, "--mode", "serial", *config_arg(env)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.strip()
    assert "Agent" not in out


def test_query_trace_prints_agent_blocks_then_final(env, capsys):
    code = main(["query", "fanout", QUESTION, "--mode", "serial", "--trace", *config_arg(env)])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.splitlines()
    agent_lines = [line for line in lines if line.startswith("Agent ")]
    assert len(agent_lines) == 3
    assert [line.split(":")[0] for line in agent_lines] == ["Agent w1", "Agent w2", "Agent w3"]
    assert lines[-1].startswith("Final: ")
    final_index = next(i for i, line in enumerate(lines) if line.startswith("Final: "))
    assert all(i < final_index for i, line in enumerate(lines) if line.startswith("Agent "))


def test_query_unknown_pipeline_exits_1(env, capsys):
    code = main(["query", "ghost", QUESTION, *config_arg(env)])
    captured = capsys.readouterr()
    assert code == 1
    assert json.loads(captured.err.strip())["error"] == "unknown_pipeline"


def test_runtime_failure_exits_2(env, capsys, rng):
    # Canned backend with no scripted responses: every node call fails.
    backends = {
        "canned": {"type": "mock_canned", "responses": {}},
        "echo": {"type": "mock_echo"},
    }
    pipeline = fanout_pipeline_config("broken", 1, "canned", "echo", ["kb_a"], top_k=2)
    root = env / "broken_env"
    root.mkdir()
    build_engine(root, backends, [pipeline], kbs={"kb_a": [("d", make_text(1500, rng))]})
    code = main(["query", "broken", QUESTION, "--config", str(root / "engine.json")])
    captured = capsys.readouterr()
    assert code == 2
    assert json.loads(captured.err.strip())["error"] == "node_failed"


def test_bench_emits_suite_report(env, capsys):
    suite = {
        "question": QUESTION,
        "baseline_label": "single",
        "configurations": [
            {"label": "single", "pipeline_id": "baseline", "mode": "serial", "repetitions": 1},
            {"label": "multi", "pipeline_id": "fanout", "mode": "serial", "repetitions": 1},
        ],
    }
    suite_path = env / "suite.json"
    suite_path.write_text(json.dumps(suite), encoding="utf-8")
    json_out = env / "report.json"
    code = main(["bench", str(suite_path), "--json", str(json_out), *config_arg(env)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0].startswith("| Configuration |")
    assert "| single |" in out and "| multi |" in out
    report = json.loads(json_out.read_text(encoding="utf-8"))
    labels = [row["label"] for row in report["rows"]]
    assert labels == ["single", "multi"]
    multi = report["rows"][1]
    assert multi["avg_passages_considered"] == pytest.approx(12.0)
    assert multi["context_window_improvement"] == pytest.approx(3.0)


def test_bench_stdout_is_exactly_the_rendered_report(env, capsys, monkeypatch):
    fixed = BenchReport(
        baseline_label="single",
        rows=(
            BenchRow("single", 1.0, 1.0, 30.0, 1.0, 20),
            BenchRow("multi", 4.0, 4.0, 90.0, 3.0, None),
        ),
    )
    monkeypatch.setattr("agentmesh.cli.run_benchmark", lambda engine, suite: fixed)
    suite = {
        "question": QUESTION,
        "baseline_label": "single",
        "configurations": [{"label": "single", "pipeline_id": "baseline"}],
    }
    suite_path = env / "suite.json"
    suite_path.write_text(json.dumps(suite), encoding="utf-8")
    code = main(["bench", str(suite_path), *config_arg(env)])
    out = capsys.readouterr().out
    assert code == 0
    assert out == report_to_markdown(fixed) + "\n"


def test_missing_config_file(tmp_path, capsys):
    code = main(["query", "fanout", QUESTION, "--config", str(tmp_path / "nope.json")])
    captured = capsys.readouterr()
    assert code == 1
    assert json.loads(captured.err.strip())["error"] == "missing_file"
