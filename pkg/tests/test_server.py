import json

import pytest
from fastapi.testclient import TestClient

from coopkitchen.harness import run_path_scenarios
from coopkitchen.scenarios import bundled_scenarios
from coopkitchen.server import BadConfig, create_app, run_headless


@pytest.fixture
def client(tmp_path):
    app = create_app(log_dir=tmp_path / "sessions")
    with TestClient(app) as c:
        c.log_dir = tmp_path / "sessions"
        yield c


FAST = {"layout": "atrium", "agent": "greedy", "tick_ms": 10, "horizon": 50, "seed": 1}


def test_create_session_and_bad_config(client):
    response = client.post("/session", json=FAST)
    assert response.status_code == 200
    body = response.json()
    assert body["id"] and body["token"]
    assert body["layout"]["width"] == 7

    assert client.post("/session", json={"layout": "nowhere"}).status_code == 400
    assert client.post("/session", json={"layout": "atrium", "agent": "wizard"}).status_code == 400
    assert client.post("/session", json={"layout": "atrium", "human_slot": 9}).status_code == 400


def join(ws, token):
    ws.send_text(json.dumps({"type": "join", "token": token}))
    return json.loads(ws.receive_text())


def test_join_action_and_frames(client):
    body = client.post("/session", json=FAST).json()
    with client.websocket_connect(f"/session/{body['id']}") as ws:
        hello = join(ws, body["token"])
        assert hello["type"] == "joined"
        start_cell = hello["frame"]["agents"][1]["cell"]
        ws.send_text(json.dumps({"type": "action", "action": "right"}))
        moved = None
        for _ in range(30):
            frame = json.loads(ws.receive_text())
            if frame["type"] != "frame":
                continue
            if frame["agents"][1]["cell"] != start_cell:
                moved = frame["agents"][1]["cell"]
                break
        assert moved == [start_cell[0] + 1, start_cell[1]]
        ws.send_text(json.dumps({"type": "leave"}))


def test_second_join_rejected(client):
    body = client.post("/session", json=FAST).json()
    with client.websocket_connect(f"/session/{body['id']}") as ws:
        assert join(ws, body["token"])["type"] == "joined"
        with client.websocket_connect(f"/session/{body['id']}") as second:
            answer = join(second, body["token"])
            assert answer["type"] == "error"
            assert "slot taken" in answer["error"]
        ws.send_text(json.dumps({"type": "leave"}))


def test_bad_token_rejected(client):
    body = client.post("/session", json=FAST).json()
    with client.websocket_connect(f"/session/{body['id']}") as ws:
        answer = join(ws, "wrong")
        assert answer["type"] == "error"


def test_ack_and_disconnect_logged(client):
    body = client.post("/session", json=FAST).json()
    with client.websocket_connect(f"/session/{body['id']}") as ws:
        join(ws, body["token"])
        ws.send_text(json.dumps({"type": "ack", "id": 1}))
        ws.send_text(json.dumps({"type": "action", "action": "up"}))
        json.loads(ws.receive_text())
        # disconnect without leave: session must persist a partial log
    log_file = client.log_dir / f"{body['id']}.json"
    for _ in range(50):
        if log_file.exists():
            break
        import time

        time.sleep(0.02)
    payload = json.loads(log_file.read_text())
    kinds = [(e["dir"], e["kind"]) for e in payload["journal"]]
    assert ("in", "ack") in kinds
    assert ("in", "join") in kinds
    assert payload["log"]["ticks"], "episode ticks must be persisted"


def test_unknown_event_and_action(client):
    body = client.post("/session", json=FAST).json()
    with client.websocket_connect(f"/session/{body['id']}") as ws:
        join(ws, body["token"])
        ws.send_text(json.dumps({"type": "dance"}))
        seen_error = False
        for _ in range(20):
            msg = json.loads(ws.receive_text())
            if msg["type"] == "error":
                seen_error = True
                break
        assert seen_error
        ws.send_text(json.dumps({"type": "leave"}))


def test_headless_requires_script():
    with pytest.raises(BadConfig):
        run_headless({"layout": "atrium", "agent": "greedy"})


def test_headless_session_matches_harness_log():
    scenario = next(s for s in bundled_scenarios() if s.adaptation_type.value == "self_adapt")
    reports = run_path_scenarios([scenario], ("monitored:rule", "greedy"), [5], validate=False)
    runner = run_headless({
        "scenario": scenario.id,
        "agent": "monitored:rule",
        "human_slot": 1,
        "headless_human": "greedy",
        "seed": 5,
    })
    assert runner.log.action_log_hash() == reports[0].action_log_hash
