"""Live-mode tests: session logic driven tick by tick (deterministic), the
subjective-view filter, and the websocket protocol over the test client."""

from __future__ import annotations

import math
import time

import pytest
from fastapi.testclient import TestClient

from intentsim.config import Config
from intentsim.geometry import Frustum, in_frustum, Pose2, Circle, Box
from intentsim.hitl import HitlSession, build_app
from intentsim.world import load_scenario, scenario_path

BALL, PERSON = 3, 2


@pytest.fixture(scope="module")
def hitl_scenario():
    return load_scenario(scenario_path("nominal_hitl"))


@pytest.fixture
def session(hitl_scenario, cfg):
    return HitlSession(hitl_scenario, cfg)


class TestSession:
    def test_requires_human_steered_script(self, nominal_scenario, cfg):
        with pytest.raises(ValueError, match="human_steered"):
            HitlSession(nominal_scenario, cfg)

    def test_fixed_gaze_hides_nominal_ball(self, session):
        visible = session.subjective_visible_ids()
        assert BALL not in visible
        assert 1 in visible  # the robot is eye height and in the sector

    def test_steer_clamped_to_speed_limit(self, session):
        vx, vy = session.apply_steer(5.0, 0.0)
        assert math.hypot(vx, vy) == pytest.approx(0.5)

    def test_no_steer_person_stationary(self, session):
        start = session.state.entities[PERSON].pose
        for _ in range(10):
            frame = session.tick()
        end = session.state.entities[PERSON].pose
        assert (end.x, end.y) == (start.x, start.y)
        assert frame["t"] == pytest.approx(0.5)

    def test_steer_moves_person_in_body_frame(self, session):
        session.apply_steer(0.5, 0.0)
        for _ in range(20):
            session.tick()
        pose = session.state.entities[PERSON].pose
        assert pose.x > 0.7 + 0.3

    def test_drive_toward_couch_triggers_risk_then_action(self, session):
        session.apply_steer(0.5, 0.0)
        events = []
        for _ in range(400):
            frame = session.tick()
            if frame["event"] != "none":
                events.append(frame["event"])
            if "action_committed" in events:
                break
        assert "risk_detected" in events
        assert "action_committed" in events
        assert events.index("risk_detected") < events.index("action_committed")
        assert session.executive.goal is not None

    def test_subjective_filter_matches_frustum_oracle(self, session, cfg):
        session.apply_steer(0.5, 0.1)
        frustum = Frustum(
            half_angle=math.radians(cfg.person.half_angle_deg),
            range=cfg.person.range_m,
            gaze_depression=math.radians(cfg.person.gaze_deg),
        )
        for _ in range(60):
            frame = session.tick()
            by_id = {e["id"]: e for e in frame["entities"]}
            person = by_id[PERSON]
            pose = Pose2(person["x"], person["y"], person["theta"])
            expected = []
            for eid, e in sorted(by_id.items()):
                if eid == PERSON:
                    continue
                extents = e["radius_or_extents"]
                truth = session.state.entities[eid]
                shape = (Circle(extents, truth.shape.height) if isinstance(extents, float)
                         else Box(extents[0], extents[1], truth.shape.height))
                if in_frustum(pose, 1.6, frustum, Pose2(e["x"], e["y"], e["theta"]), shape):
                    expected.append(eid)
            assert frame["subjective_visible_ids"] == expected

    def test_reset_restores_initial_state(self, session):
        session.apply_steer(0.5, 0.0)
        for _ in range(30):
            session.tick()
        session.reset()
        assert session.state.time == 0.0
        pose = session.state.entities[PERSON].pose
        assert (pose.x, pose.y) == (0.7, 3.0)


class TestProtocol:
    @pytest.fixture
    def client(self, hitl_scenario, cfg):
        app = build_app(hitl_scenario, cfg)
        with TestClient(app) as test_client:
            yield test_client

    @staticmethod
    def next_frame(ws, timeout=5.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            message = ws.receive_json()
            if message.get("type") == "frame":
                return message
        raise AssertionError("no frame received")

    def test_connect_receives_session_and_frames(self, client):
        with client.websocket_connect("/ws") as ws:
            hello = ws.receive_json()
            assert hello["type"] == "ack"
            assert "session" in hello
            frame = self.next_frame(ws)
            assert frame["t"] >= 0.0
            assert any(e["class"] == "ball" for e in frame["entities"])

    def test_steer_round_trip_latency_within_two_ticks(self, client):
        with client.websocket_connect("/ws") as ws:
            token = ws.receive_json()["session"]
            before = self.next_frame(ws)
            person_before = next(e for e in before["entities"] if e["id"] == PERSON)
            ws.send_json({"type": "steer", "vx": 0.5, "vy": 0.0, "session": token})
            moved_at = None
            for _ in range(200):
                message = ws.receive_json()
                if message.get("type") != "frame":
                    continue
                person = next(e for e in message["entities"] if e["id"] == PERSON)
                if person["x"] != person_before["x"]:
                    moved_at = message["t"]
                    break
            assert moved_at is not None
            # Up to one tick for the ack to land plus one tick to integrate.
            assert moved_at - before["t"] <= 0.1 + 0.051

    def test_second_steering_client_rejected(self, client):
        with client.websocket_connect("/ws") as first, client.websocket_connect("/ws") as second:
            t1 = first.receive_json()["session"]
            t2 = second.receive_json()["session"]
            first.send_json({"type": "steer", "vx": 0.1, "vy": 0.0, "session": t1})
            second.send_json({"type": "steer", "vx": 0.1, "vy": 0.0, "session": t2})

            def acks(ws):
                for _ in range(100):
                    message = ws.receive_json()
                    if message.get("type") in ("ack", "error"):
                        return message
                raise AssertionError("no reply")

            assert acks(first)["type"] == "ack"
            reply = acks(second)
            assert reply["type"] == "error"
            assert "busy" in reply["error"]

    def test_malformed_message_keeps_connection(self, client):
        with client.websocket_connect("/ws") as ws:
            token = ws.receive_json()["session"]
            ws.send_text("this is not json")
            saw_error = False
            for _ in range(100):
                message = ws.receive_json()
                if message.get("type") == "error":
                    saw_error = True
                    break
            assert saw_error
            ws.send_json({"type": "steer", "vx": 0.0, "vy": 0.0, "session": token})
            for _ in range(100):
                message = ws.receive_json()
                if message.get("type") == "ack" and message.get("ack") == "steer":
                    break
            else:
                raise AssertionError("connection did not survive")

    def test_unknown_type_error_reply(self, client):
        with client.websocket_connect("/ws") as ws:
            token = ws.receive_json()["session"]
            ws.send_json({"type": "dance", "session": token})
            for _ in range(100):
                message = ws.receive_json()
                if message.get("type") == "error":
                    assert "unknown message type" in message["error"]
                    return
            raise AssertionError("no error reply")

    def test_reset_pause_start_cycle(self, client):
        with client.websocket_connect("/ws") as ws:
            token = ws.receive_json()["session"]
            running = self.next_frame(ws)
            assert running["t"] > 0.0
            ws.send_json({"type": "reset", "session": token})
            for _ in range(200):
                message = ws.receive_json()
                if message.get("type") == "ack" and message.get("ack") == "reset":
                    assert message["t"] == 0.0
                    break
            else:
                raise AssertionError("no reset ack")
            # Paused after reset; on start the tick clock resumes from zero.
            ws.send_json({"type": "start", "session": token})
            frame = self.next_frame(ws)
            assert frame["t"] <= running["t"]
            person = next(e for e in frame["entities"] if e["id"] == PERSON)
            assert person["x"] == pytest.approx(0.7)

    def test_real_loopback_steer_latency(self, hitl_scenario, cfg):
        # Full network path: uvicorn on an ephemeral loopback port, a real
        # websocket client, and the 100 ms steer-to-pose budget.
        import contextlib
        import socket
        import threading

        import uvicorn
        from websockets.sync.client import connect as ws_connect

        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        app = build_app(hitl_scenario, cfg)
        server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                               log_level="critical"))
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            deadline = time.monotonic() + 10
            while not server.started and time.monotonic() < deadline:
                time.sleep(0.02)
            assert server.started
            with ws_connect(f"ws://127.0.0.1:{port}/ws") as ws:
                import json
                token = json.loads(ws.recv())["session"]
                before = None
                while before is None:
                    message = json.loads(ws.recv())
                    if message.get("type") == "frame":
                        before = message
                assert BALL not in before["subjective_visible_ids"]
                person_before = next(e for e in before["entities"] if e["id"] == PERSON)
                ws.send(json.dumps({"type": "steer", "vx": 0.5, "vy": 0.0, "session": token}))
                moved_t = None
                for _ in range(300):
                    message = json.loads(ws.recv())
                    if message.get("type") != "frame":
                        continue
                    person = next(e for e in message["entities"] if e["id"] == PERSON)
                    if person["x"] != person_before["x"]:
                        moved_t = message["t"]
                        break
                assert moved_t is not None
                assert moved_t - before["t"] <= 0.1 + 0.051
        finally:
            server.should_exit = True
            with contextlib.suppress(Exception):
                thread.join(timeout=5)

    def test_pause_freezes_tick_clock(self, hitl_scenario, cfg):
        session = HitlSession(hitl_scenario, cfg)
        session.tick()
        t_before = session.state.time
        session.paused = True
        # The server's ticker skips session.tick() while paused, so no frames
        # are produced and the clock cannot advance; unpausing resumes.
        assert session.state.time == t_before
        session.paused = False
        session.tick()
        assert session.state.time > t_before
