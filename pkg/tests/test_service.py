import json
import warnings

import pytest

warnings.filterwarnings("ignore", category=DeprecationWarning)

from fastapi.testclient import TestClient

from nisarena.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def new_session(client, n=3, k=2):
    r = client.post("/sessions", json={"n": n, "k": k})
    assert r.status_code == 200
    return r.json()["sessionId"]


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_session_lifecycle_mirrors_library(client):
    sid = new_session(client)
    summary = client.get(f"/sessions/{sid}").json()
    assert summary["phase"] == 1
    assert len(summary["aSet"]) == 27
    conf_key = summary["aSet"][14]["configKey"]

    step = client.post(
        f"/sessions/{sid}/query", json={"configKey": conf_key, "process": 1}
    )
    assert step.status_code == 200
    assert step.json()["states"][0]["stage"] == "to_scan"

    out = client.post(
        f"/sessions/{sid}/output-query",
        json={"configKey": conf_key, "processes": [1, 2, 3], "value": 1},
    )
    assert out.status_code == 200
    sched = out.json()["schedule"]
    assert sched is not None

    cur = conf_key
    for pid in sched:
        r = client.post(
            f"/sessions/{sid}/query", json={"configKey": cur, "process": pid}
        )
        assert r.status_code == 200
        cur = r.json()["configKey"]
    walked = r.json()["states"]
    assert any(s["output"] == 1 for s in walked)

    commit = client.post(
        f"/sessions/{sid}/commit", json={"configKey": conf_key, "schedule": [1]}
    )
    assert commit.status_code == 200
    assert commit.json()["phase"] == 2

    summary2 = client.get(f"/sessions/{sid}").json()
    assert summary2["finalized"] is True
    assert len(summary2["aSet"]) == 9


def test_graph_export_contains_seen_sets(client):
    sid = new_session(client, n=2, k=2)
    r = client.get(f"/sessions/{sid}/graph", params={"level": 0})
    assert r.status_code == 200
    payload = r.json()
    assert payload["level"] == 0
    assert len(payload["vertices"]) == 6
    for entry in payload["vertices"]:
        assert entry["seen"] == [entry["input"]]


def test_transcript_endpoint_matches_protocol(client):
    sid = new_session(client)
    summary = client.get(f"/sessions/{sid}").json()
    conf_key = summary["aSet"][0]["configKey"]
    client.post(f"/sessions/{sid}/query", json={"configKey": conf_key, "process": 2})
    text = client.get(f"/sessions/{sid}/transcript").text
    lines = [json.loads(line) for line in text.splitlines() if line]
    assert len(lines) == 1
    assert lines[0]["kind"] == "step"
    assert lines[0]["request"]["process"] == 2


def test_error_paths(client):
    assert client.get("/sessions/deadbeef").status_code == 404
    sid = new_session(client)
    r = client.post(
        f"/sessions/{sid}/query", json={"configKey": "f" * 64, "process": 1}
    )
    assert r.status_code == 404
    summary = client.get(f"/sessions/{sid}").json()
    conf_key = summary["aSet"][0]["configKey"]
    r = client.post(
        f"/sessions/{sid}/query", json={"configKey": conf_key, "process": 7}
    )
    assert r.status_code == 409
    r = client.post("/sessions", json={"n": 3, "k": 1})
    assert r.status_code == 422
    r = client.get(f"/sessions/{sid}/graph", params={"level": 42})
    assert r.status_code == 422
