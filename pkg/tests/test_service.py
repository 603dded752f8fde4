import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from agentmesh.service.app import create_app

from conftest import build_engine, make_text, fanout_pipeline_config

QUESTION = "What drove subscription revenue growth?"


def desk_engine(tmp_path, rng, latency_ms=0, max_in_flight=16):
    backends = {
        "echo": {"type": "mock_echo", "fixed_latency_ms": latency_ms},
        "instant": {"type": "mock_echo", "fixed_latency_ms": 0},
    }
    kbs = {
        kb_id: [(f"{kb_id}_doc{i}", make_text(2600, rng)) for i in range(2)]
        for kb_id in ("kb_a", "kb_b", "kb_c")
    }
    pipelines = [
        fanout_pipeline_config("fanout", 3, "echo", "echo", ["kb_a", "kb_b", "kb_c"], top_k=4)
    ]
    return build_engine(
        tmp_path, backends, pipelines, kbs=kbs, max_in_flight=max_in_flight
    )


@pytest.fixture
def client(tmp_path, rng):
    engine = desk_engine(tmp_path, rng)
    return TestClient(create_app(engine)), engine


def test_healthz(client):
    http, _ = client
    response = http.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_pipelines_listing(client):
    http, _ = client
    body = http.get("/v1/pipelines").json()
    assert len(body["pipelines"]) == 1
    summary = body["pipelines"][0]
    assert summary["pipeline_id"] == "fanout"
    assert summary["layers"] == [["w1", "w2", "w3"], ["agg"]]
    assert summary["agent_count"] == 4
    assert summary["roles"]["agg"] == "aggregator"


def test_query_returns_agent_answers(client):
    http, _ = client
    response = http.post(
        "/v1/query", json={"pipeline_id": "fanout", "question": QUESTION, "mode": "serial"}
    )
    assert response.status_code == 200
    body = response.json()
    assert set(body) == {"run_id", "final_answer", "agent_answers"}
    assert len(body["agent_answers"]) == 3
    for answer in body["agent_answers"]:
        assert set(answer) == {"agent_id", "answer", "abstained", "grounding_score"}
        assert answer["answer"]
    assert body["final_answer"]


def test_query_unknown_pipeline_404(client):
    http, _ = client
    response = http.post("/v1/query", json={"pipeline_id": "ghost", "question": QUESTION})
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_pipeline"


def test_query_validation_errors_are_400(client):
    http, _ = client
    assert http.post("/v1/query", json={"pipeline_id": "fanout"}).status_code == 400
    assert (
        http.post("/v1/query", json={"pipeline_id": "fanout", "question": "  "}).status_code == 400
    )
    assert (
        http.post(
            "/v1/query", json={"pipeline_id": "fanout", "question": QUESTION, "mode": "warp"}
        ).status_code
        == 400
    )


def test_trace_retrievable_and_identical_to_persisted(client):
    http, engine = client
    body = http.post("/v1/query", json={"pipeline_id": "fanout", "question": QUESTION}).json()
    run_id = body["run_id"]
    response = http.get(f"/v1/runs/{run_id}/trace")
    assert response.status_code == 200
    from_endpoint = response.json()
    on_disk = json.loads(engine.trace_store.path_for(run_id).read_text(encoding="utf-8"))
    assert from_endpoint == on_disk
    assert from_endpoint["final_answer"] == body["final_answer"]
    assert len(from_endpoint["node_outputs"]) == 4


def test_trace_unknown_run_404(client):
    http, _ = client
    response = http.get("/v1/runs/nope/trace")
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_run"


def test_ingest_endpoint(client):
    http, engine = client
    files = [
        ("files", ("novel_doc.txt", make_text(2500, __import__("random").Random(7)).encode(), "text/plain")),
    ]
    response = http.post("/v1/kb/kb_new/ingest", files=files)
    assert response.status_code == 200
    body = response.json()
    assert body["kb_id"] == "kb_new"
    assert body["chunks_per_doc"] == {"novel_doc.txt": 4}
    assert len(engine.store.get("kb_new")) == 4


def test_run_failure_returns_500_with_node_id(tmp_path, rng):
    backends = {
        "canned": {"type": "mock_canned", "responses": {}},
        "echo": {"type": "mock_echo"},
    }
    pipeline = fanout_pipeline_config("broken", 1, "canned", "echo", ["kb_a"], top_k=2)
    engine = build_engine(
        tmp_path, backends, [pipeline], kbs={"kb_a": [("d", make_text(1500, rng))]}
    )
    http = TestClient(create_app(engine))
    response = http.post("/v1/query", json={"pipeline_id": "broken", "question": QUESTION})
    assert response.status_code == 500
    body = response.json()
    assert body["error"] == "node_failed"
    assert body["node_id"] == "w1"


def test_simultaneous_queries_are_isolated(tmp_path, rng):
    engine = desk_engine(tmp_path, rng, latency_ms=300)
    http = TestClient(create_app(engine))
    results = []

    def fire():
        results.append(
            http.post(
                "/v1/query",
                json={"pipeline_id": "fanout", "question": QUESTION, "mode": "parallel"},
            )
        )

    threads = [threading.Thread(target=fire) for _ in range(2)]
    start = time.monotonic()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    elapsed = time.monotonic() - start

    assert all(r.status_code == 200 for r in results)
    run_ids = {r.json()["run_id"] for r in results}
    assert len(run_ids) == 2
    # Ran concurrently: two 0.6s runs in well under 1.2s.
    assert elapsed < 1.1
    for response in results:
        trace = http.get(f"/v1/runs/{response.json()['run_id']}/trace").json()
        assert trace["run_id"] == response.json()["run_id"]
        assert len(trace["node_outputs"]) == 4
        assert trace["final_answer"] == response.json()["final_answer"]


def test_backpressure_429(tmp_path, rng):
    engine = desk_engine(tmp_path, rng, latency_ms=400, max_in_flight=1)
    http = TestClient(create_app(engine))
    responses = {}

    def slow_query():
        responses["first"] = http.post(
            "/v1/query", json={"pipeline_id": "fanout", "question": QUESTION, "mode": "parallel"}
        )

    thread = threading.Thread(target=slow_query)
    thread.start()
    time.sleep(0.2)  # first run is mid-flight and holds the only slot
    second = http.post("/v1/query", json={"pipeline_id": "fanout", "question": QUESTION})
    thread.join()

    assert second.status_code == 429
    assert second.json()["error"] == "too_many_runs"
    assert responses["first"].status_code == 200
