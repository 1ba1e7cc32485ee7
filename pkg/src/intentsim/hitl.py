"""Live human-in-the-loop mode: the world ticks at wall-clock rate with the
full agent stack running, state frames stream to websocket clients, and one
steering client drives the person avatar. The avatar's view is filtered through
a fixed gaze, so floor-level hazards stay hidden from the subject."""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
import math
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .agents import AtmAgents, RobotExecutive, sweep_once
from .config import Config
from .consequence import ConsequenceEngine
from .geometry import Box, Circle, Frustum, Pose2, in_frustum
from .memory import WorkingMemory, query_intentions
from .perception import NoiseModel, observe, publish
from .world import HumanSteered, Scenario, WALL_ID, initial_state, step

FRONTEND_DIST = Path(__file__).resolve().parents[2] / "frontend" / "static"


@dataclass
class SteerInput:
    vx: float = 0.0
    vy: float = 0.0


class HitlSession:
    """World + agent stack stepped one tick at a time; pure of any networking."""

    def __init__(self, scenario: Scenario, cfg: Config, noise: NoiseModel = NoiseModel()):
        if not isinstance(scenario.person_script, HumanSteered):
            raise ValueError("live mode needs person_script: human_steered")
        self.scenario = scenario
        self.cfg = cfg
        self.noise = noise
        self.paused = False
        self.reset()

    def reset(self) -> None:
        cfg = self.cfg
        self.state = initial_state(self.scenario, cfg.world.dt)
        self.wm = WorkingMemory()
        self.agents = AtmAgents(self.wm, cfg, ConsequenceEngine(cfg))
        self.executive = RobotExecutive(cfg)
        self.steer = SteerInput()
        self._events: list[str] = []
        self._risk_seen = False
        self._action_seen = False
        self._collisions_seen = 0
        self._goal_reached = False
        self._guess_every = max(1, int(round(cfg.atm.guess_period_s / cfg.world.dt)))
        self._perceive(0)
        self._sweep()

    # ---- steering ----

    def apply_steer(self, vx: float, vy: float) -> tuple[float, float]:
        """Queue a body-frame steering command, clamped to the person's speed
        limit; the last command within a tick wins."""
        person = self.state.entities[self.scenario.person.id]
        speed = math.hypot(vx, vy)
        if speed > person.speed_limit > 0.0:
            scale = person.speed_limit / speed
            vx, vy = vx * scale, vy * scale
        self.steer = SteerInput(vx, vy)
        return (vx, vy)

    # ---- internals ----

    def _perceive(self, tick: int) -> None:
        robot = self.scenario.robot
        detections = observe(self.state, robot.id, self.noise,
                             self.cfg.perception.sensor_range_m)
        publish(self.wm, self.state.entities[robot.id].pose, detections, tick,
                self.cfg.perception, self.cfg.person, self.cfg.world.dt,
                robot_shape=robot.shape, robot_speed_limit=robot.speed_limit,
                room=(self.scenario.room_width, self.scenario.room_depth))

    def _sweep(self) -> None:
        had_risk = self.agents.first_risky_version is not None
        had_action = bool(self.agents.committed_actions)
        sweep_once(self.agents, self.executive)
        if not had_risk and self.agents.first_risky_version is not None and not self._risk_seen:
            self._risk_seen = True
            self._events.append("risk_detected")
        if not had_action and self.agents.committed_actions and not self._action_seen:
            self._action_seen = True
            self._events.append("action_committed")

    def subjective_visible_ids(self) -> list[int]:
        """What the steered person currently perceives under the fixed gaze."""
        person = self.state.entities[self.scenario.person.id]
        frustum = Frustum(
            half_angle=math.radians(self.cfg.person.half_angle_deg),
            range=self.cfg.person.range_m,
            gaze_depression=math.radians(self.cfg.person.gaze_deg),
        )
        eye = person.eye_height if person.eye_height is not None else self.cfg.person.eye_height_m
        return [
            eid for eid, e in sorted(self.state.entities.items())
            if eid != person.id
            and in_frustum(person.pose, eye, frustum, e.pose, e.shape)
        ]

    def tick(self) -> dict:
        """Advance one world tick and return the frame to broadcast."""
        cfg = self.cfg
        dt = cfg.world.dt
        person = self.scenario.person
        robot = self.scenario.robot
        pose = self.state.entities[person.id].pose
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        world_cmd = (c * self.steer.vx - s * self.steer.vy,
                     s * self.steer.vx + c * self.steer.vy)
        robot_cmd = self.executive.command(
            self.wm.snapshot(), self.state.entities[robot.id].pose,
            robot.shape.radius, robot.speed_limit, robot.accel_limit, dt)
        prev_events = len(self.state.collision_events)
        self.state = step(self.state, {person.id: world_cmd, robot.id: robot_cmd}, dt)
        self._perceive(self.state.tick)
        if self.state.tick % self._guess_every == 0:
            self._sweep()
        for when, a, b in self.state.collision_events[prev_events:]:
            if person.id in (a, b) and WALL_ID not in (a, b):
                self._events.append("collision")
        if not self._goal_reached and self._near_goal():
            self._goal_reached = True
            self._events.append("goal_reached")
        return self.frame()

    def _near_goal(self) -> bool:
        person = self.state.entities[self.scenario.person.id]
        for e in self.state.entities.values():
            if e.cls in ("couch", "chair"):
                from .geometry import footprint_distance
                d = footprint_distance(person.pose.x, person.pose.y, e.pose, e.shape)
                if d <= 0.45:
                    return True
        return False

    def frame(self) -> dict:
        entities = []
        for eid, e in sorted(self.state.entities.items()):
            extents = (e.shape.radius if isinstance(e.shape, Circle)
                       else [e.shape.half_x, e.shape.half_y])
            entities.append({
                "id": eid, "class": e.cls,
                "x": e.pose.x, "y": e.pose.y, "theta": e.pose.theta,
                "radius_or_extents": extents,
            })
        snap = self.wm.snapshot()
        intentions = [
            {"person": int(n.attrs["subject"]), "target": int(n.attrs["target"]),
             "risky": n.attrs.get("c") is True}
            for n in query_intentions(snap)
            if n.attrs.get("subject") != 1
        ]
        path = self.executive.current_path
        robot_plan = ([[w.x, w.y] for w in path.waypoints]
                      if path is not None and self.executive.goal is not None else [])
        return {
            "type": "frame",
            "t": self.state.time,
            "entities": entities,
            "subjective_visible_ids": self.subjective_visible_ids(),
            "intentions": intentions,
            "robot_plan": robot_plan,
            "event": self._events.pop(0) if self._events else "none",
            "room": {"width_m": self.scenario.room_width, "depth_m": self.scenario.room_depth},
            "person_id": self.scenario.person.id,
        }


@dataclass
class _Client:
    socket: WebSocket
    queue: asyncio.Queue = field(default_factory=lambda: asyncio.Queue(maxsize=32))
    token: str = field(default_factory=lambda: secrets.token_hex(8))


def build_app(scenario: Scenario, cfg: Config, noise: NoiseModel = NoiseModel(),
              static_dir: Path | None = None) -> FastAPI:
    """FastAPI app: one WebSocket endpoint speaking the frame/steer protocol,
    a 20 Hz tick task, and the browser client served as static assets."""
    session = HitlSession(scenario, cfg, noise)
    clients: list[_Client] = []
    control: dict[str, str | None] = {"token": None}  # steering slot

    async def ticker() -> None:
        dt = cfg.world.dt
        loop = asyncio.get_running_loop()
        next_at = loop.time()
        while True:
            next_at += dt
            delay = next_at - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_at = loop.time()  # fell behind; resynchronize
            if session.paused:
                continue
            frame = session.tick()
            for client in clients:
                if client.queue.full():
                    try:
                        client.queue.get_nowait()  # frames are snapshots; drop oldest
                    except asyncio.QueueEmpty:
                        pass
                client.queue.put_nowait(frame)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        task = asyncio.create_task(ticker())
        yield
        task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    def handle_message(client: _Client, message: dict) -> dict | None:
        kind = message.get("type")
        if kind not in ("steer", "reset", "start", "pause"):
            return {"type": "error", "error": f"unknown message type {kind!r}"}
        token = message.get("session")
        if token != client.token:
            return {"type": "error", "error": "bad session token"}
        if control["token"] is None:
            control["token"] = client.token
        if control["token"] != client.token:
            return {"type": "error", "error": "session busy"}
        if kind == "steer":
            try:
                vx, vy = float(message["vx"]), float(message["vy"])
            except (KeyError, TypeError, ValueError):
                return {"type": "error", "error": "steer needs numeric vx and vy"}
            applied = session.apply_steer(vx, vy)
            return {"type": "ack", "ack": "steer", "vx": applied[0], "vy": applied[1]}
        if kind == "reset":
            session.reset()
            session.paused = True
            return {"type": "ack", "ack": "reset", "t": session.state.time}
        if kind == "pause":
            session.paused = True
            return {"type": "ack", "ack": "pause"}
        session.paused = False
        return {"type": "ack", "ack": "start"}

    @app.websocket("/ws")
    async def ws_endpoint(socket: WebSocket) -> None:
        await socket.accept()
        client = _Client(socket)
        clients.append(client)
        await socket.send_json({"type": "ack", "ack": "connected", "session": client.token})

        async def pump() -> None:
            while True:
                frame = await client.queue.get()
                await socket.send_json(frame)

        sender = asyncio.create_task(pump())
        try:
            while True:
                try:
                    message = await socket.receive_json()
                except ValueError:
                    await socket.send_json({"type": "error", "error": "malformed message"})
                    continue
                reply = handle_message(client, message)
                if reply is not None:
                    await socket.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            clients.remove(client)
            if control["token"] == client.token:
                control["token"] = None

    dist = static_dir if static_dir is not None else FRONTEND_DIST
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=dist, html=True), name="ui")
    return app
