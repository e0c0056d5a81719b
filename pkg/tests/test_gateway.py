import pytest
from fastapi.testclient import TestClient

from sandbox.gateway import create_app
from sandbox.scenarios import build_session
from sandbox.session import record_key, EventLogRecord

CONFIG = {"api": "gift_bag", "scene": "gift_bag", "aliases": "gift_bag",
          "backend": "det", "seed": 0}


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


def _create(client, **config):
    resp = client.post("/sessions", json={"config": dict(CONFIG, **config)})
    assert resp.status_code == 200
    return resp.json()["session_id"]


def test_create_and_list_sessions(client):
    sid = _create(client)
    listing = client.get("/sessions").json()["sessions"]
    assert [s["session_id"] for s in listing] == [sid]
    assert listing[0]["mode"] == "Idle" and listing[0]["api_version"] == 0


def test_create_from_bundled_scenario(client):
    resp = client.post("/sessions", json={"scenario": "gift_bags"})
    assert resp.status_code == 200
    assert resp.json()["config"]["aliases"] == "gift_bag"


def test_unknown_session_404(client):
    assert client.post("/sessions/nope/utterance",
                       json={"text": "hi"}).status_code == 404


def test_command_round_trip(client):
    sid = _create(client)
    resp = client.post(f"/sessions/{sid}/utterance",
                       json={"text": "grab the candy", "t_ms": 1000})
    body = resp.json()
    assert body["mode"] == "AwaitingConfirmation"
    assert [r["kind"] for r in body["records"]] == ["utterance", "plan"]
    resp = client.post(f"/sessions/{sid}/confirm",
                       json={"accept": True, "t_ms": 2000})
    kinds = [r["kind"] for r in resp.json()["records"]]
    assert kinds == ["confirm", "plan", "exec_step", "exec_step", "outcome"]
    assert resp.json()["mode"] == "Idle"


def test_mode_violation_is_409(client):
    sid = _create(client)
    resp = client.post(f"/sessions/{sid}/confirm", json={})
    assert resp.status_code == 409
    # the rejected input is still logged
    log = client.get(f"/sessions/{sid}/log").json()["records"]
    assert log[-1]["kind"] == "confirm" and "rejected" in log[-1]["payload"]


def test_keypoint_teach_over_http(client):
    sid = _create(client)
    client.post(f"/sessions/{sid}/utterance",
                json={"text": "grab the toy car", "t_ms": 1000})
    resp = client.post(f"/sessions/{sid}/teach/keypoint",
                       json={"px": 445.0, "py": 390.0, "t_ms": 2000})
    assert resp.json()["mode"] == "AwaitingConfirmation"
    client.post(f"/sessions/{sid}/confirm", json={"accept": True, "t_ms": 3000})
    listing = client.get("/sessions").json()["sessions"]
    assert listing[0]["api_version"] == 1


def test_demo_pose_rate_limit(client):
    sid = _create(client)
    client.post(f"/sessions/{sid}/teach/demo/begin",
                json={"verb": "swoop", "target": "CANDY", "t_ms": 100})
    ok = client.post(f"/sessions/{sid}/teach/demo/append",
                     json={"p": [0.3, 0.0, 0.4], "ts": 0.0})
    assert ok.status_code == 200
    too_fast = client.post(f"/sessions/{sid}/teach/demo/append",
                           json={"p": [0.3, 0.0, 0.4], "ts": 0.01})
    assert too_fast.status_code == 429
    spaced = client.post(f"/sessions/{sid}/teach/demo/append",
                         json={"p": [0.3, 0.0, 0.4], "ts": 0.02})
    assert spaced.status_code == 200
    # demo_end resets the limiter; cancel the auto-proposed plan first
    end = client.post(f"/sessions/{sid}/teach/demo/end", json={})
    if end.json()["mode"] == "AwaitingConfirmation":
        client.post(f"/sessions/{sid}/confirm", json={"accept": False})
    client.post(f"/sessions/{sid}/teach/demo/begin",
                json={"verb": "swoop", "target": "CANDY"})
    assert client.post(f"/sessions/{sid}/teach/demo/append",
                       json={"p": [0.3, 0.0, 0.4], "ts": 0.0}).status_code == 200


def test_generic_event_allows_only_markers(client):
    sid = _create(client)
    ok = client.post(f"/sessions/{sid}/event",
                     json={"kind": "segment",
                           "payload": {"label": "bag2", "p_err": 0.5}})
    assert ok.status_code == 200
    bad = client.post(f"/sessions/{sid}/event",
                      json={"kind": "utterance", "payload": {"text": "hi"}})
    assert bad.status_code == 422


def test_preview_and_metrics_views(client):
    sid = _create(client)
    client.post(f"/sessions/{sid}/utterance",
                json={"text": "grab the candy", "t_ms": 1000})
    preview = client.get(f"/sessions/{sid}/preview").json()
    assert preview["mode"] == "AwaitingConfirmation"
    assert preview["plan"] == "pickup(ObjectRef.CANDY)"
    assert len(preview["trajectories"]) >= 1
    client.post(f"/sessions/{sid}/confirm", json={"accept": True, "t_ms": 2000})
    metrics = client.get(f"/sessions/{sid}/metrics").json()
    assert metrics["metrics"] == metrics["recomputed"]
    assert metrics["metrics"]["primitive_calls"] == 2


def test_gateway_log_matches_in_process_run(client):
    script = [
        ("utterance", {"text": "go home", "t_ms": 1000}),
        ("confirm", {"accept": True, "t_ms": 2500}),
        ("utterance", {"text": "now can you pack the candy in the bag",
                       "t_ms": 5000}),
        ("teach/decomposition",
         {"text": "Pick up the candy; go above the bag; drop it", "t_ms": 9000}),
        ("confirm", {"accept": True, "t_ms": 11000}),
        ("utterance", {"text": "pack the play doh in the bag", "t_ms": 14000}),
        ("confirm", {"accept": True, "t_ms": 15000}),
    ]
    sid = _create(client)
    for route, body in script:
        assert client.post(f"/sessions/{sid}/{route}",
                           json=body).status_code == 200
    remote = client.get(f"/sessions/{sid}/log").json()["records"]

    local = build_session(dict(CONFIG), session_id=sid)
    for route, body in script:
        kind = route.rsplit("/", 1)[-1] if "/" in route else route
        local.handle_event(dict(body, kind=kind))
    # identical event-sourced logs, timestamps included
    assert [record_key(EventLogRecord.from_doc(d)) for d in remote] == \
        [record_key(r) for r in local.records]


def test_websocket_streams_records_in_order(client):
    sid = _create(client)
    client.post(f"/sessions/{sid}/utterance",
                json={"text": "grab the candy", "t_ms": 1000})
    client.post(f"/sessions/{sid}/confirm", json={"accept": True, "t_ms": 2000})
    expected = client.get(f"/sessions/{sid}/log").json()["records"]
    with client.websocket_connect(f"/sessions/{sid}/events") as ws:
        got = [ws.receive_json() for _ in expected]
    assert got == expected
    assert [r["seq"] for r in got] == list(range(len(got)))
