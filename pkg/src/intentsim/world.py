"""Ground-truth world: scenario loading and seeded resampling, fixed-tick
kinematics with speed/acceleration clamps, wall containment and true collision
events. Bodies pass through each other; overlaps are recorded, not resolved."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .geometry import Box, Circle, Pose2, Shape, footprint_distance

WALL_ID = -1


class ScenarioError(ValueError):
    """A scenario document failed validation."""


@dataclass
class Entity:
    id: int
    cls: str
    pose: Pose2
    shape: Shape
    dynamic: bool = False
    speed_limit: float = 0.0
    accel_limit: float = 0.0
    eye_height: float | None = None
    vel: tuple[float, float] = (0.0, 0.0)

    @property
    def circumradius(self) -> float:
        if isinstance(self.shape, Circle):
            return self.shape.radius
        return math.hypot(self.shape.half_x, self.shape.half_y)


@dataclass(frozen=True)
class ScriptedPerson:
    target_id: int
    speed: float
    gaze_deg: float | None = None


@dataclass(frozen=True)
class HumanSteered:
    pass


@dataclass(frozen=True)
class Sampling:
    radius_m: float
    ids: tuple[int, ...]


@dataclass
class Scenario:
    seed: int
    room_width: float
    room_depth: float
    entities: list[Entity]
    person_script: ScriptedPerson | HumanSteered
    sampling: Sampling

    def entity(self, eid: int) -> Entity:
        for e in self.entities:
            if e.id == eid:
                return e
        raise KeyError(f"no entity with id {eid}")

    def by_class(self, cls: str) -> list[Entity]:
        return [e for e in self.entities if e.cls == cls]

    @property
    def robot(self) -> Entity:
        return self.by_class("robot")[0]

    @property
    def person(self) -> Entity:
        return self.by_class("person")[0]


@dataclass
class WorldState:
    dt: float
    entities: dict[int, Entity]
    tick: int = 0
    collision_events: list[tuple[float, int, int]] = field(default_factory=list)
    overlapping: frozenset[tuple[int, int]] = frozenset()
    room_width: float = 0.0
    room_depth: float = 0.0

    @property
    def time(self) -> float:
        return self.tick * self.dt


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ScenarioError(message)


def _parse_shape(raw: object, where: str) -> Shape:
    _require(isinstance(raw, dict) and len(raw) == 1, f"{where}: shape must be one of circle/box")
    kind, params = next(iter(raw.items()))
    if kind == "circle":
        _require(isinstance(params, dict) and set(params) == {"r"}, f"{where}: circle needs key r")
        return Circle(float(params["r"]))
    if kind == "box":
        _require(isinstance(params, dict) and set(params) == {"hx", "hy"},
                 f"{where}: box needs keys hx, hy")
        return Box(float(params["hx"]), float(params["hy"]))
    raise ScenarioError(f"{where}: unknown shape kind {kind!r}")


_ENTITY_KEYS = {"id", "class", "pose", "shape", "height", "dynamic",
                "speed_limit", "accel_limit", "eye_height_m"}
_TOP_KEYS = {"seed", "room", "entities", "person_script", "sampling"}


def load_scenario(source: str | Path | dict) -> Scenario:
    """Parse and validate a scenario document (YAML file path or mapping)."""
    if isinstance(source, (str, Path)):
        raw = yaml.safe_load(Path(source).read_text(encoding="utf-8"))
    else:
        raw = source
    _require(isinstance(raw, dict), "scenario must be a mapping")
    for key in set(raw) - _TOP_KEYS:
        raise ScenarioError(f"unknown field {key!r}")
    _require("room" in raw and "entities" in raw, "scenario needs room and entities")

    room = raw["room"]
    _require(isinstance(room, dict) and set(room) == {"width_m", "depth_m"},
             "room needs width_m and depth_m")
    width, depth = float(room["width_m"]), float(room["depth_m"])
    _require(width > 0 and depth > 0, "room dimensions must be positive")

    entities: list[Entity] = []
    seen_ids: set[int] = set()
    for raw_ent in raw["entities"]:
        _require(isinstance(raw_ent, dict), "entity must be a mapping")
        where = f"entity {raw_ent.get('id', '?')}"
        for key in sorted(set(raw_ent) - _ENTITY_KEYS):
            raise ScenarioError(f"{where}: unknown field {key!r}")
        for needed in ("id", "class", "pose", "shape"):
            _require(needed in raw_ent, f"{where}: missing field {needed!r}")
        eid = int(raw_ent["id"])
        _require(eid not in seen_ids, f"duplicate id {eid}")
        seen_ids.add(eid)
        pose_raw = raw_ent["pose"]
        _require(isinstance(pose_raw, (list, tuple)) and len(pose_raw) == 3,
                 f"{where}: pose must be [x, y, theta]")
        pose = Pose2(float(pose_raw[0]), float(pose_raw[1]), float(pose_raw[2]))
        _require(0.0 <= pose.x <= width and 0.0 <= pose.y <= depth,
                 f"entity {eid} pose outside room")
        shape2 = _parse_shape(raw_ent["shape"], where)
        height = float(raw_ent.get("height", 0.0))
        _require(height >= 0.0, f"{where}: height must be >= 0")
        shape = replace(shape2, height=height)
        dynamic = bool(raw_ent.get("dynamic", False))
        speed_limit = float(raw_ent.get("speed_limit", 0.0))
        accel_limit = float(raw_ent.get("accel_limit", 0.0))
        if dynamic:
            _require(speed_limit > 0.0, f"{where}: dynamic entity needs speed_limit > 0")
            _require(accel_limit > 0.0, f"{where}: dynamic entity needs accel_limit > 0")
        eye = raw_ent.get("eye_height_m")
        entities.append(Entity(
            id=eid, cls=str(raw_ent["class"]), pose=pose, shape=shape, dynamic=dynamic,
            speed_limit=speed_limit, accel_limit=accel_limit,
            eye_height=float(eye) if eye is not None else None,
        ))

    script_raw = raw.get("person_script", "human_steered")
    script: ScriptedPerson | HumanSteered
    if script_raw == "human_steered":
        script = HumanSteered()
    else:
        _require(isinstance(script_raw, dict), "person_script must be a mapping or 'human_steered'")
        allowed = {"target_id", "speed", "gaze_deg"}
        for key in sorted(set(script_raw) - allowed):
            raise ScenarioError(f"person_script: unknown field {key!r}")
        _require("target_id" in script_raw and "speed" in script_raw,
                 "person_script needs target_id and speed")
        target_id = int(script_raw["target_id"])
        _require(target_id in seen_ids, f"person_script target_id {target_id} not an entity")
        speed = float(script_raw["speed"])
        _require(speed > 0.0, "person_script speed must be > 0")
        gaze = script_raw.get("gaze_deg")
        script = ScriptedPerson(target_id, speed, float(gaze) if gaze is not None else None)

    sampling_raw = raw.get("sampling", {"radius_m": 0.0, "ids": []})
    _require(isinstance(sampling_raw, dict) and set(sampling_raw) <= {"radius_m", "ids"},
             "sampling needs radius_m and ids")
    radius = float(sampling_raw.get("radius_m", 0.0))
    _require(radius >= 0.0, "sampling radius_m must be >= 0")
    ids = tuple(int(i) for i in sampling_raw.get("ids", []))
    for sid in ids:
        _require(sid in seen_ids, f"sampling id {sid} not an entity")

    return Scenario(
        seed=int(raw.get("seed", 0)),
        room_width=width,
        room_depth=depth,
        entities=entities,
        person_script=script,
        sampling=Sampling(radius, ids),
    )


def shapes_overlap(pose_a: Pose2, shape_a: Shape, pose_b: Pose2, shape_b: Shape) -> bool:
    """Strict footprint overlap. Box-box pairs use a conservative circumradius
    test; all moving bodies in the shipped scenarios are discs."""
    if isinstance(shape_a, Circle):
        return footprint_distance(pose_a.x, pose_a.y, pose_b, shape_b) < shape_a.radius
    if isinstance(shape_b, Circle):
        return footprint_distance(pose_b.x, pose_b.y, pose_a, shape_a) < shape_b.radius
    ra = math.hypot(shape_a.half_x, shape_a.half_y)
    rb = math.hypot(shape_b.half_x, shape_b.half_y)
    return math.hypot(pose_a.x - pose_b.x, pose_a.y - pose_b.y) < ra + rb


def sample_scenario(base: Scenario, seed: int) -> Scenario:
    """Displace each sampled entity by a uniform draw from a disc around its
    nominal position, rejecting placements that overlap other entities or fall
    outside the room (up to 100 redraws each)."""
    entities = [replace(e, pose=e.pose, vel=(0.0, 0.0)) for e in base.entities]
    scenario = Scenario(
        seed=seed,
        room_width=base.room_width,
        room_depth=base.room_depth,
        entities=entities,
        person_script=base.person_script,
        sampling=base.sampling,
    )
    radius = base.sampling.radius_m
    if radius == 0.0 or not base.sampling.ids:
        return scenario
    rng = np.random.default_rng(seed)
    by_id = {e.id: e for e in entities}
    for sid in base.sampling.ids:
        entity = by_id[sid]
        nominal = entity.pose
        margin = entity.circumradius
        for attempt in range(100):
            r = radius * math.sqrt(float(rng.uniform()))
            phi = float(rng.uniform(0.0, 2.0 * math.pi))
            candidate = Pose2(nominal.x + r * math.cos(phi), nominal.y + r * math.sin(phi),
                              nominal.theta)
            if not (margin <= candidate.x <= base.room_width - margin
                    and margin <= candidate.y <= base.room_depth - margin):
                continue
            clear = all(
                other.id == sid
                or not shapes_overlap(candidate, entity.shape, other.pose, other.shape)
                for other in entities
            )
            if clear:
                entity.pose = candidate
                break
        else:
            raise ScenarioError(f"unsatisfiable sample for entity {sid}")
    return scenario


def initial_state(scenario: Scenario, dt: float) -> WorldState:
    return WorldState(
        dt=dt,
        entities={e.id: replace(e, vel=(0.0, 0.0)) for e in scenario.entities},
        room_width=scenario.room_width,
        room_depth=scenario.room_depth,
    )


def integrate_velocity(
    prev: tuple[float, float],
    command: tuple[float, float],
    speed_limit: float,
    accel_limit: float,
    dt: float,
) -> tuple[float, float]:
    """Clamp a commanded velocity to the speed limit, then limit the change
    from the previous velocity to accel_limit * dt."""
    cx, cy = command
    speed = math.hypot(cx, cy)
    if speed > speed_limit > 0.0:
        scale = speed_limit / speed
        cx, cy = cx * scale, cy * scale
    dvx, dvy = cx - prev[0], cy - prev[1]
    dv = math.hypot(dvx, dvy)
    max_dv = accel_limit * dt
    if dv > max_dv > 0.0:
        scale = max_dv / dv
        dvx, dvy = dvx * scale, dvy * scale
    return (prev[0] + dvx, prev[1] + dvy)


def step(state: WorldState, commands: dict[int, tuple[float, float]], dt: float) -> WorldState:
    """Advance the world by one tick. Velocities are clamped, poses integrated,
    bodies clamped inside the room, and fresh overlaps appended as events."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    entities = {eid: replace(e) for eid, e in state.entities.items()}
    events = list(state.collision_events)
    now = (state.tick + 1) * state.dt
    wall_hits: set[int] = set()

    for eid, command in sorted(commands.items()):
        entity = entities.get(eid)
        if entity is None:
            raise ValueError(f"command for unknown entity {eid}")
        if not entity.dynamic:
            raise ValueError(f"command for static entity {eid}")
        vel = integrate_velocity(entity.vel, command, entity.speed_limit, entity.accel_limit, dt)
        x = entity.pose.x + vel[0] * dt
        y = entity.pose.y + vel[1] * dt
        r = entity.circumradius
        cx = min(max(x, r), state.room_width - r)
        cy = min(max(y, r), state.room_depth - r)
        if cx != x or cy != y:
            wall_hits.add(eid)
        speed = math.hypot(*vel)
        theta = math.atan2(vel[1], vel[0]) if speed > 1e-9 else entity.pose.theta
        entity.vel = vel
        entity.pose = Pose2(cx, cy, theta)

    overlapping: set[tuple[int, int]] = set()
    ids = sorted(entities)
    for i, a in enumerate(ids):
        ea = entities[a]
        for b in ids[i + 1:]:
            eb = entities[b]
            if not (ea.dynamic or eb.dynamic):
                continue
            if shapes_overlap(ea.pose, ea.shape, eb.pose, eb.shape):
                overlapping.add((a, b))
    for eid in wall_hits:
        overlapping.add((eid, WALL_ID))
    for pair in sorted(overlapping):
        if pair not in state.overlapping:
            events.append((now, pair[0], pair[1]))

    return WorldState(
        dt=state.dt,
        entities=entities,
        tick=state.tick + 1,
        collision_events=events,
        overlapping=frozenset(overlapping),
        room_width=state.room_width,
        room_depth=state.room_depth,
    )


def scenario_path(name: str) -> Path:
    """Path of a scenario file shipped with the package."""
    return Path(__file__).parent / "scenarios" / f"{name}.yaml"
