"""Synthetic perception: converts ground truth into working-memory detections
with persistent track ids and a seeded noise model. Position error and size
inflation stand in for depth estimation error and mis-sized detector boxes;
classes are never wrong and nothing is ever hallucinated."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import PerceptionConfig, PersonConfig
from .geometry import Box, Circle, Pose2, Shape, compose, relative_pose
from .memory import (
    AddEdge,
    AddNode,
    Edge,
    Edit,
    Node,
    RemoveEdge,
    RemoveNode,
    UpdateEdge,
    UpdateNode,
    WorkingMemory,
)
from .world import WorldState

ROBOT_NODE = 1  # the robot's own node id mirrors its entity id in all scenarios


@dataclass(frozen=True)
class NoiseModel:
    """Seeded detection noise; zero sigmas reproduce ground truth exactly."""

    pos_sigma: float = 0.0
    size_inflation_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pos_sigma < 0.0 or self.size_inflation_sigma < 0.0:
            raise ValueError("noise sigmas must be >= 0")

    @property
    def enabled(self) -> bool:
        return self.pos_sigma > 0.0 or self.size_inflation_sigma > 0.0


@dataclass(frozen=True)
class Detection:
    track_id: int
    cls: str
    pose: Pose2  # robot frame
    shape: Shape
    orientation_valid: bool
    eye_height: float | None = None


def _draw(noise: NoiseModel, tick: int, entity_id: int) -> tuple[float, float, float]:
    """Deterministic noise draw for (seed, tick, entity): (dx, dy, multiplier)."""
    rng = np.random.default_rng(np.random.SeedSequence([noise.seed, tick, entity_id]))
    dx, dy = rng.normal(0.0, noise.pos_sigma, size=2) if noise.pos_sigma > 0 else (0.0, 0.0)
    if noise.size_inflation_sigma > 0:
        m = float(np.clip(1.0 + rng.normal(0.0, noise.size_inflation_sigma), 0.5, 2.0))
    else:
        m = 1.0
    return float(dx), float(dy), m


def inflate_shape(shape: Shape, multiplier: float) -> Shape:
    """Scale planar extents by the multiplier; heights pass through exactly."""
    if isinstance(shape, Circle):
        return Circle(shape.radius * multiplier, shape.height)
    return Box(shape.half_x * multiplier, shape.half_y * multiplier, shape.height)


def observe(
    world: WorldState,
    robot_id: int,
    noise: NoiseModel,
    sensor_range: float = 10.0,
) -> list[Detection]:
    """One detection per entity within sensor range, excluding the robot itself.

    Tracking is perfect: the track id is the entity id, stable across frames.
    Noise is deterministic in (seed, tick, entity id).
    """
    robot = world.entities[robot_id]
    detections: list[Detection] = []
    for eid in sorted(world.entities):
        if eid == robot_id:
            continue
        entity = world.entities[eid]
        if math.hypot(entity.pose.x - robot.pose.x, entity.pose.y - robot.pose.y) > sensor_range:
            continue
        rel = relative_pose(robot.pose, entity.pose)
        shape = entity.shape
        if noise.enabled:
            dx, dy, m = _draw(noise, world.tick, eid)
            rel = Pose2(rel.x + dx, rel.y + dy, rel.theta)
            shape = inflate_shape(shape, m)
        detections.append(Detection(
            track_id=eid,
            cls=entity.cls,
            pose=rel,
            shape=shape,
            orientation_valid=entity.cls == "person",
            eye_height=entity.eye_height,
        ))
    return detections


def _shape_attrs(shape: Shape) -> dict[str, object]:
    if isinstance(shape, Circle):
        return {"shape": "circle", "radius": shape.radius, "height": shape.height}
    return {"shape": "box", "half_x": shape.half_x, "half_y": shape.half_y,
            "height": shape.height}


def node_shape(node: Node) -> Shape:
    """Reconstruct a footprint from working-memory node attributes."""
    if node.attrs.get("shape") == "circle":
        return Circle(float(node.attrs["radius"]), float(node.attrs.get("height", 0.0)))
    return Box(float(node.attrs["half_x"]), float(node.attrs["half_y"]),
               float(node.attrs.get("height", 0.0)))


def node_pose(node: Node) -> Pose2:
    return Pose2(float(node.attrs["x"]), float(node.attrs["y"]), float(node.attrs["theta"]))


def publish(
    wm: WorkingMemory,
    robot_pose: Pose2,
    detections: list[Detection],
    tick: int,
    cfg: PerceptionConfig,
    person_cfg: PersonConfig,
    dt: float,
    robot_shape: Shape | None = None,
    robot_speed_limit: float = 1.0,
    room: tuple[float, float] = (8.0, 6.0),
) -> int:
    """Upsert the robot's self node plus one node and RT edge per detection.

    Detected absolute poses are the robot pose composed with the noisy relative
    transform. Entities unseen for longer than the timeout are removed together
    with everything hanging off them.
    """
    snap = wm.snapshot()
    edits: list[Edit] = []

    robot_attrs: dict[str, object] = {
        "x": robot_pose.x, "y": robot_pose.y, "theta": robot_pose.theta,
        "cls": "robot", "speed_limit": robot_speed_limit,
        "room_w": room[0], "room_d": room[1],
    }
    robot_attrs.update(_shape_attrs(robot_shape if robot_shape is not None else Circle(0.35, 1.2)))
    if ROBOT_NODE not in snap.nodes:
        edits.append(AddNode(Node(ROBOT_NODE, "robot", robot_attrs)))
    else:
        edits.append(UpdateNode(ROBOT_NODE, robot_attrs))

    for det in detections:
        absolute = compose(robot_pose, det.pose)
        kind = "person" if det.cls == "person" else "object"
        attrs: dict[str, object] = {
            "x": absolute.x, "y": absolute.y, "theta": absolute.theta,
            "cls": det.cls, "track_id": det.track_id, "last_seen_tick": tick,
            "orientation_valid": det.orientation_valid,
        }
        attrs.update(_shape_attrs(det.shape))
        if kind == "person":
            attrs["eye_height"] = det.eye_height if det.eye_height is not None else person_cfg.eye_height_m
        rt_attrs = {"x": det.pose.x, "y": det.pose.y, "theta": det.pose.theta}
        if det.track_id not in snap.nodes:
            edits.append(AddNode(Node(det.track_id, kind, attrs)))
            edits.append(AddEdge(Edge(ROBOT_NODE, det.track_id, "RT", rt_attrs)))
        else:
            edits.append(UpdateNode(det.track_id, attrs))
            edits.append(UpdateEdge(ROBOT_NODE, det.track_id, "RT", rt_attrs))

    # Timeout removal with cascade over intentions attached to the vanished node.
    timeout_ticks = int(round(cfg.timeout_s / dt))
    seen_now = {d.track_id for d in detections}
    for node in snap.nodes.values():
        if node.kind not in ("person", "object") or node.id in seen_now:
            continue
        last = int(node.attrs.get("last_seen_tick", tick))
        if tick - last <= timeout_ticks:
            continue
        edits.extend(_cascade_removal(snap, node.id))

    return wm.transact(edits)


def _cascade_removal(snap, node_id: int) -> list[Edit]:
    edits: list[Edit] = []
    doomed = {node_id}
    for edge in snap.edges.values():
        if edge.label in ("has_intention", "approaching") and node_id in (edge.src, edge.dst):
            intention = edge.dst if edge.label == "has_intention" else edge.src
            doomed.add(intention)
    for extra in list(doomed):
        for edge in snap.edges.values():
            if edge.label == "collision" and edge.src == extra:
                doomed.add(edge.dst)
    for edge in snap.edges.values():
        if edge.src in doomed or edge.dst in doomed:
            edits.append(RemoveEdge(edge.src, edge.dst, edge.label))
    for nid in sorted(doomed):
        edits.append(RemoveNode(nid))
    return edits
