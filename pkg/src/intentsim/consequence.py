"""The internal simulator. It runs entirely on detached working-memory
snapshots: an intention is enacted by planning on the subject's subjective
occupancy grid (only what their gaze admits), then walking the plan through the
unmodified scene, re-planning whenever something new enters their view. The
returned flag c reports whether the walk collides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .config import Config
from .geometry import Circle, Frustum, Pose2, Shape, in_frustum, normalize_angle
from .memory import Snapshot
from .navigation import GridBounds, OccupancyGrid, Path, Unreachable, build_grid, plan
from .perception import ROBOT_NODE, node_pose, node_shape
from .person import GazeLimitedWalker, SceneBody, standoff_point
from .world import integrate_velocity, shapes_overlap

TraceHook = Callable[[dict], None]


class SimulationHorizonError(RuntimeError):
    """A rollout exceeded the simulated-time cap."""


@dataclass(frozen=True)
class IntentionRecord:
    """One enactable engagement: (subject, target, action, gaze sample)."""

    subject: int
    target: int
    action: str = "move_to"
    gaze: float | None = None  # radians of depression; robot records carry none
    c: bool | None = None
    collision_time: float | None = None
    collision_xy: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.subject == self.target:
            raise ValueError("intention subject and target must differ")


@dataclass
class SimOutcome:
    c: bool
    collision_time: float | None
    collision_xy: tuple[float, float] | None
    planned_path: Path | Unreachable
    trajectory: list[Pose2]
    replanned: bool
    reachable: bool
    collided_with: int | None = None
    arrived: bool = False
    # Populated by co_simulate only.
    admissible: bool | None = None
    robot_goal: Pose2 | None = None
    robot_path: Path | Unreachable | None = None
    robot_arrival_s: float | None = None


@dataclass(frozen=True)
class SceneView:
    """Geometry pulled out of a snapshot."""

    bounds: GridBounds
    robot_pose: Pose2 | None
    robot_shape: Shape | None
    robot_speed: float
    objects: list[SceneBody]
    people: list[SceneBody]

    def bodies_for(self, subject_id: int, target_id: int | None,
                   robot_override: Pose2 | None = None) -> list[SceneBody]:
        """Obstacle bodies for a subject: every scene element except the subject
        itself and its target, with the robot optionally imagined elsewhere."""
        bodies = [b for b in self.objects if b.id != target_id]
        bodies += [p for p in self.people if p.id != subject_id]
        if self.robot_pose is not None and subject_id != ROBOT_NODE and target_id != ROBOT_NODE:
            pose = robot_override if robot_override is not None else self.robot_pose
            bodies.append(SceneBody(ROBOT_NODE, pose, self.robot_shape))
        return sorted(bodies, key=lambda b: b.id)


def scene_from_snapshot(snapshot: Snapshot) -> SceneView:
    robot = snapshot.nodes.get(ROBOT_NODE)
    robot_pose = node_pose(robot) if robot is not None and "x" in robot.attrs else None
    robot_shape: Shape | None = None
    robot_speed = 1.0
    width = depth = None
    if robot is not None:
        radius = robot.attrs.get("radius")
        if radius is not None:
            robot_shape = Circle(float(radius), float(robot.attrs.get("height", 0.0)))
        robot_speed = float(robot.attrs.get("speed_limit", 1.0))
        width = robot.attrs.get("room_w")
        depth = robot.attrs.get("room_d")
    if width is None or depth is None:
        raise ValueError("snapshot carries no room extent (robot node missing room_w/room_d)")
    objects = [
        SceneBody(n.id, node_pose(n), node_shape(n))
        for n in snapshot.nodes_of_kind("object")
    ]
    people = [
        SceneBody(n.id, node_pose(n), node_shape(n))
        for n in snapshot.nodes_of_kind("person")
    ]
    return SceneView(
        bounds=GridBounds(0.0, 0.0, float(width), float(depth)),
        robot_pose=robot_pose,
        robot_shape=robot_shape,
        robot_speed=robot_speed,
        objects=objects,
        people=people,
    )


class ConsequenceEngine:
    """Detached intention simulator over working-memory snapshots."""

    def __init__(self, cfg: Config, trace: TraceHook | None = None) -> None:
        self.cfg = cfg
        self.trace = trace

    def _frustum(self, gaze: float) -> Frustum:
        person = self.cfg.person
        return Frustum(
            half_angle=math.radians(person.half_angle_deg),
            range=person.range_m,
            gaze_depression=gaze,
        )

    def _person_node(self, snapshot: Snapshot, person_id: int):
        node = snapshot.nodes.get(person_id)
        if node is None or node.kind != "person":
            raise ValueError(f"person {person_id} not in snapshot")
        return node

    def subjective_grid(
        self,
        snapshot: Snapshot,
        person_id: int,
        gaze: float,
        hypothesized_robot: Pose2 | None = None,
        target_id: int | None = None,
    ) -> OccupancyGrid:
        """Occupancy grid of exactly what the person perceives at this gaze.

        The intention's target is left out of occupancy (walking up to your
        goal is allowed); a hypothesized robot placement replaces the real one.
        """
        node = self._person_node(snapshot, person_id)
        pose = node_pose(node)
        eye = float(node.attrs.get("eye_height", self.cfg.person.eye_height_m))
        scene = scene_from_snapshot(snapshot)
        frustum = self._frustum(gaze)
        bodies = scene.bodies_for(person_id, target_id, robot_override=hypothesized_robot)
        visible = [
            (b.pose, b.shape) for b in bodies
            if in_frustum(pose, eye, frustum, b.pose, b.shape)
        ]
        radius = node_shape(node)
        mover = radius.radius if isinstance(radius, Circle) else radius.half_x
        return build_grid(
            visible,
            mover_radius=mover,
            bounds=scene.bounds,
            resolution=self.cfg.nav.resolution_m,
            margin=self.cfg.person.margin_m,
        )

    def simulate_intention(
        self,
        snapshot: Snapshot,
        intent: IntentionRecord,
        hypothesized_robot: Pose2 | None = None,
    ) -> SimOutcome:
        """Enact one person intention on a detached snapshot.

        Plans on the subjective grid, then walks the plan through the full
        snapshot scene (minus the target), re-planning on newly seen bodies.
        """
        node = self._person_node(snapshot, intent.subject)
        target = snapshot.nodes.get(intent.target)
        if target is None:
            raise ValueError(f"target {intent.target} not in snapshot")
        if intent.gaze is None:
            raise ValueError("person intention needs a gaze sample")
        scene = scene_from_snapshot(snapshot)
        pose = node_pose(node)
        eye = float(node.attrs.get("eye_height", self.cfg.person.eye_height_m))
        shape = node_shape(node)
        radius = shape.radius if isinstance(shape, Circle) else shape.half_x
        person_cfg = self.cfg.person
        world_cfg = self.cfg.world
        bodies = scene.bodies_for(intent.subject, intent.target, robot_override=hypothesized_robot)

        walker = GazeLimitedWalker(
            body_radius=radius,
            speed=person_cfg.speed_mps,
            frustum=self._frustum(intent.gaze),
            eye_height=eye,
            clearance_margin=person_cfg.margin_m,
            target_id=intent.target,
            target_pose=node_pose(target),
            target_shape=node_shape(target),
            nav=self.cfg.nav,
            bounds=scene.bounds,
            standoff_gap=world_cfg.standoff_gap_m,
            move_eps=person_cfg.replan_move_eps_m,
            decel=person_cfg.accel_limit,
        )

        dt = world_cfg.dt
        max_ticks = int(round(world_cfg.sim_horizon_s / dt))
        vel = (0.0, 0.0)
        trajectory = [pose]
        arc = 0.0
        person_disc = Circle(radius, shape.height)
        outcome: SimOutcome | None = None

        for _ in range(max_ticks):
            cmd = walker.command(pose, bodies, dt)
            if walker.arrived or (walker.blocked and cmd == (0.0, 0.0)):
                break
            vel = integrate_velocity(vel, cmd, person_cfg.speed_mps, person_cfg.accel_limit, dt)
            x = pose.x + vel[0] * dt
            y = pose.y + vel[1] * dt
            x = min(max(x, radius), scene.bounds.max_x - radius)
            y = min(max(y, radius), scene.bounds.max_y - radius)
            speed = math.hypot(*vel)
            theta = math.atan2(vel[1], vel[0]) if speed > 1e-9 else pose.theta
            new_pose = Pose2(x, y, theta)
            arc += math.hypot(new_pose.x - pose.x, new_pose.y - pose.y)
            pose = new_pose
            trajectory.append(pose)
            hit = next(
                (b for b in bodies if shapes_overlap(pose, person_disc, b.pose, b.shape)),
                None,
            )
            if hit is not None:
                outcome = SimOutcome(
                    c=True,
                    collision_time=arc / person_cfg.speed_mps,
                    collision_xy=(pose.x, pose.y),
                    planned_path=walker.debug.planned,
                    trajectory=trajectory,
                    replanned=walker.debug.replanned,
                    reachable=not walker.blocked,
                    collided_with=hit.id,
                    arrived=False,
                )
                break
        else:
            raise SimulationHorizonError(
                f"simulation horizon exceeded for intention {intent.subject}->{intent.target}"
            )

        if outcome is None:
            first_plan_blocked = walker.debug.plans <= 1 and walker.blocked
            outcome = SimOutcome(
                c=False,
                collision_time=None,
                collision_xy=None,
                planned_path=walker.debug.planned if walker.debug.planned is not None
                else Unreachable("no_route"),
                trajectory=trajectory,
                replanned=walker.debug.replanned,
                reachable=not first_plan_blocked,
                arrived=walker.arrived,
            )
        if self.trace is not None:
            self.trace(_trace_record("simulate_intention", intent, hypothesized_robot, outcome))
        return outcome

    def co_simulate(
        self,
        snapshot: Snapshot,
        robot_intent: IntentionRecord,
        person_intent: IntentionRecord,
    ) -> SimOutcome:
        """Check whether a robot action cancels a risky person intention.

        Plans the robot to its target on the full-scene grid, gates on arrival
        time against the predicted collision time, then re-enacts the person's
        intention with the robot imagined at its destination.
        """
        scene = scene_from_snapshot(snapshot)
        if scene.robot_pose is None or scene.robot_shape is None:
            raise ValueError("snapshot has no robot")
        target = snapshot.nodes.get(robot_intent.target)
        if target is None:
            raise ValueError(f"target {robot_intent.target} not in snapshot")
        robot_radius = scene.robot_shape.radius

        obstacles = robot_planning_obstacles(
            scene.bodies_for(ROBOT_NODE, robot_intent.target),
            {p.id for p in scene.people},
            self.cfg.person.margin_m,
        )
        grid = build_grid(
            obstacles,
            mover_radius=robot_radius,
            bounds=scene.bounds,
            resolution=self.cfg.nav.resolution_m,
            margin=self.cfg.nav.margin_m,
        )
        # The goal hugs the target tightly enough that the robot's inflated
        # body covers the hazard from every approach direction, so the nearest
        # side (shortest, person-free drive) is the right choice.
        goal = standoff_point(
            node_pose(target), node_shape(target),
            scene.robot_pose.x, scene.robot_pose.y,
            self.cfg.world.standoff_gap_m,
        )
        robot_path = plan(grid, scene.robot_pose, goal)
        if isinstance(robot_path, Unreachable):
            outcome = SimOutcome(
                c=True, collision_time=person_intent.collision_time,
                collision_xy=person_intent.collision_xy,
                planned_path=robot_path, trajectory=[], replanned=False,
                reachable=False, admissible=None, robot_goal=None, robot_path=robot_path,
            )
            if self.trace is not None:
                self.trace(_trace_record("co_simulate", robot_intent, None, outcome))
            return outcome

        arrival = robot_path.total_length / max(scene.robot_speed, 1e-9)
        deadline = person_intent.collision_time
        admissible = (
            deadline is None
            or arrival + self.cfg.atm.admissibility_margin_s <= deadline
        )
        if not admissible:
            outcome = SimOutcome(
                c=True, collision_time=person_intent.collision_time,
                collision_xy=person_intent.collision_xy,
                planned_path=robot_path, trajectory=[], replanned=False, reachable=True,
                admissible=False, robot_goal=goal, robot_path=robot_path,
                robot_arrival_s=arrival,
            )
            if self.trace is not None:
                self.trace(_trace_record("co_simulate", robot_intent, goal, outcome))
            return outcome

        outcome = self.simulate_intention(snapshot, person_intent, hypothesized_robot=goal)
        outcome.admissible = True
        outcome.robot_goal = goal
        outcome.robot_path = robot_path
        outcome.robot_arrival_s = arrival
        if self.trace is not None:
            self.trace(_trace_record("co_simulate", robot_intent, goal, outcome))
        return outcome


def robot_planning_obstacles(
    bodies: list[SceneBody],
    people_ids: set[int],
    social_margin: float,
) -> list[tuple[Pose2, Shape]]:
    """Obstacle footprints for robot planning, with people padded by a
    personal-space margin so the robot never cuts right past a walking body."""
    out: list[tuple[Pose2, Shape]] = []
    for b in bodies:
        shape = b.shape
        if b.id in people_ids:
            if isinstance(shape, Circle):
                shape = Circle(shape.radius + social_margin, shape.height)
            else:
                shape = type(shape)(shape.half_x + social_margin,
                                    shape.half_y + social_margin, shape.height)
        out.append((b.pose, shape))
    return out


def _trace_record(
    kind: str,
    intent: IntentionRecord,
    hypothesized: Pose2 | None,
    outcome: SimOutcome,
) -> dict:
    planned = outcome.planned_path
    return {
        "kind": kind,
        "subject": intent.subject,
        "target": intent.target,
        "action": intent.action,
        "gaze_deg": math.degrees(intent.gaze) if intent.gaze is not None else None,
        "hypothesized_robot": [hypothesized.x, hypothesized.y] if hypothesized else None,
        "planned_path": (
            [[round(w.x, 4), round(w.y, 4)] for w in planned.waypoints]
            if isinstance(planned, Path) else f"unreachable:{getattr(planned, 'reason', '?')}"
        ),
        "trajectory": [[round(p.x, 4), round(p.y, 4)] for p in outcome.trajectory],
        "c": outcome.c,
        "collision_time": outcome.collision_time,
        "collision_xy": list(outcome.collision_xy) if outcome.collision_xy else None,
        "replanned": outcome.replanned,
        "reachable": outcome.reachable,
        "admissible": outcome.admissible,
    }
