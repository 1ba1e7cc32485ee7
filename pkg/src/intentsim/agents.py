"""The two working-memory agents: an intention guesser that sweeps every
(person, target, action, gaze) combination through the internal simulator and
annotates the graph with risk flags, and an action selector that searches for
the first robot move that cancels a flagged risk. A small executive drives the
real robot toward a committed intervention goal."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

from .config import Config
from .consequence import (
    ConsequenceEngine,
    IntentionRecord,
    SimOutcome,
    SimulationHorizonError,
    robot_planning_obstacles,
    scene_from_snapshot,
)
from .geometry import Circle, Frustum, Pose2, in_frustum
from .memory import (
    AddEdge,
    AddNode,
    Edge,
    Edit,
    Node,
    RemoveEdge,
    RemoveNode,
    Snapshot,
    UpdateNode,
    WorkingMemory,
    query_intentions,
    query_objects,
    query_people,
)
from .navigation import GridBounds, Path, PurePursuit, Unreachable, build_grid, plan
from .perception import ROBOT_NODE, node_pose, node_shape
from .person import SceneBody

log = logging.getLogger(__name__)

INTENTION_BASE = 10_000
ROBOT_INTENTION_BASE = 20_000
COLLISION_OFFSET = 20_000  # collision node id = intention id + offset

ActionCommitHook = Callable[[Snapshot, IntentionRecord, IntentionRecord, SimOutcome], None]


def record_from_node(node: Node) -> IntentionRecord:
    attrs = node.attrs
    xy = attrs.get("collision_xy")
    return IntentionRecord(
        subject=int(attrs["subject"]),
        target=int(attrs["target"]),
        action=str(attrs.get("action", "move_to")),
        gaze=float(attrs["gaze"]) if "gaze" in attrs else None,
        c=bool(attrs["c"]) if "c" in attrs else None,
        collision_time=float(attrs["collision_time"]) if "collision_time" in attrs else None,
        collision_xy=(float(xy[0]), float(xy[1])) if xy is not None else None,
    )


class AtmAgents:
    """Owns both sweep agents and their bookkeeping for one live session."""

    def __init__(self, wm: WorkingMemory, cfg: Config,
                 engine: ConsequenceEngine | None = None) -> None:
        self.wm = wm
        self.cfg = cfg
        self.engine = engine if engine is not None else ConsequenceEngine(cfg)
        self._intent_ids: dict[tuple[int, int, int], int] = {}
        self._next_intent = INTENTION_BASE
        self._next_robot = ROBOT_INTENTION_BASE
        self._handled: set[tuple[int, int]] = set()
        self.committed_actions: list[IntentionRecord] = []
        self.first_risky_version: int | None = None
        self.first_action_version: int | None = None

    # ---- intention guessing ----

    def _fov_targets(self, snapshot: Snapshot, person: Node) -> list[Node]:
        """Objects inside the person's frustum at the most conservative gaze."""
        pose = node_pose(person)
        eye = float(person.attrs.get("eye_height", self.cfg.person.eye_height_m))
        frustum = Frustum(
            half_angle=math.radians(self.cfg.person.half_angle_deg),
            range=self.cfg.person.range_m,
            gaze_depression=math.radians(self.cfg.atm.gaze_min_deg),
        )
        return [
            obj for obj in query_objects(snapshot)
            if in_frustum(pose, eye, frustum, node_pose(obj), node_shape(obj))
        ]

    def guess_intentions(self) -> int | None:
        """One full sweep: simulate every candidate intention and commit the
        records (and collision markers for risky ones) in a single transaction.
        Returns the committed version, or None when there was nothing to do."""
        snapshot = self.wm.snapshot()
        people = query_people(snapshot)
        scene_robot = snapshot.nodes.get(ROBOT_NODE)
        if scene_robot is not None and people:
            rx, ry = scene_robot.attrs.get("x", 0.0), scene_robot.attrs.get("y", 0.0)
            people.sort(key=lambda p: math.hypot(p.attrs["x"] - rx, p.attrs["y"] - ry))
        people = people[: self.cfg.atm.max_people]

        gazes = self.cfg.atm.gaze_values()
        current: dict[tuple[int, int, int], tuple[IntentionRecord, SimOutcome | None]] = {}
        pairs: set[tuple[int, int]] = set()
        for person in people:
            for target in self._fov_targets(snapshot, person):
                pairs.add((person.id, target.id))
                for k, gaze in enumerate(gazes):
                    intent = IntentionRecord(subject=person.id, target=target.id, gaze=gaze)
                    try:
                        outcome = self.engine.simulate_intention(snapshot, intent)
                    except SimulationHorizonError as exc:
                        log.warning("intention %s->%s gaze %.0f: %s",
                                    person.id, target.id, math.degrees(gaze), exc)
                        outcome = None
                    current[(person.id, target.id, k)] = (intent, outcome)

        edits: list[Edit] = []
        for key in sorted(current):
            intent, outcome = current[key]
            edits.extend(self._upsert_intention(snapshot, key, intent, outcome))
        edits.extend(self._retire_vanished(snapshot, pairs))
        if not edits:
            return None
        version = self.wm.transact(edits)
        if self.first_risky_version is None and any(
            o is not None and o.c for _, o in current.values()
        ):
            self.first_risky_version = version
        return version

    def _upsert_intention(
        self,
        snapshot: Snapshot,
        key: tuple[int, int, int],
        intent: IntentionRecord,
        outcome: SimOutcome | None,
    ) -> list[Edit]:
        person_id, target_id, k = key
        node_id = self._intent_ids.get(key)
        fresh = node_id is None
        if fresh:
            node_id = self._next_intent
            self._next_intent += 1
            self._intent_ids[key] = node_id

        attrs: dict[str, object] = {
            "subject": person_id,
            "target": target_id,
            "action": intent.action,
            "gaze": float(intent.gaze),
            "sample_index": k,
        }
        if outcome is not None:
            attrs["c"] = outcome.c
            attrs["reachable"] = outcome.reachable
            if outcome.c:
                attrs["collision_time"] = float(outcome.collision_time)
                attrs["collision_xy"] = tuple(outcome.collision_xy)

        edits: list[Edit] = []
        if fresh or node_id not in snapshot.nodes:
            edits.append(AddNode(Node(node_id, "intention", attrs)))
            edits.append(AddEdge(Edge(person_id, node_id, "has_intention")))
            edits.append(AddEdge(Edge(node_id, target_id, "approaching")))
        else:
            edits.append(UpdateNode(node_id, attrs))

        collision_id = node_id + COLLISION_OFFSET
        was_risky = collision_id in snapshot.nodes
        is_risky = outcome is not None and outcome.c
        if is_risky:
            cx, cy = outcome.collision_xy
            c_attrs = {"x": float(cx), "y": float(cy), "time": float(outcome.collision_time)}
            if was_risky:
                edits.append(UpdateNode(collision_id, c_attrs))
            else:
                edits.append(AddNode(Node(collision_id, "collision", c_attrs)))
                edits.append(AddEdge(Edge(node_id, collision_id, "collision")))
        elif was_risky:
            edits.append(RemoveEdge(node_id, collision_id, "collision"))
            edits.append(RemoveNode(collision_id))
        return edits

    def _retire_vanished(self, snapshot: Snapshot, pairs: set[tuple[int, int]]) -> list[Edit]:
        edits: list[Edit] = []
        for key in sorted(self._intent_ids):
            if (key[0], key[1]) in pairs:
                continue
            node_id = self._intent_ids.pop(key)
            if node_id not in snapshot.nodes:
                continue
            person_id, target_id, _ = key
            collision_id = node_id + COLLISION_OFFSET
            if collision_id in snapshot.nodes:
                edits.append(RemoveEdge(node_id, collision_id, "collision"))
                edits.append(RemoveNode(collision_id))
            edits.append(RemoveEdge(person_id, node_id, "has_intention"))
            edits.append(RemoveEdge(node_id, target_id, "approaching"))
            edits.append(RemoveNode(node_id))
        return edits

    # ---- action selection ----

    def risky_nodes(self, snapshot: Snapshot) -> list[Node]:
        risky = [n for n in query_intentions(snapshot) if n.attrs.get("c") is True]
        risky.sort(key=lambda n: (n.attrs.get("collision_time", math.inf), n.id))
        return risky

    def pending_risk(self, snapshot: Snapshot) -> bool:
        return any(
            (int(n.attrs["subject"]), int(n.attrs["target"])) not in self._handled
            for n in self.risky_nodes(snapshot)
        )

    def select_action(self, on_commit: ActionCommitHook | None = None) -> IntentionRecord | None:
        """Search risky intentions (soonest collision first) for the first robot
        move that cancels one; commit it and return it, or return None."""
        snapshot = self.wm.snapshot()
        risky = self.risky_nodes(snapshot)
        if not risky:
            return None
        objects = query_objects(snapshot)
        for intent_node in risky:
            person_intent = record_from_node(intent_node)
            ref = person_intent.collision_xy
            ordered = sorted(
                objects,
                key=lambda o: (
                    math.hypot(o.attrs["x"] - ref[0], o.attrs["y"] - ref[1])
                    if ref is not None else o.id,
                    o.id,
                ),
            )
            for action in ("move_to",):
                for obj in ordered:
                    robot_intent = IntentionRecord(
                        subject=ROBOT_NODE, target=obj.id, action=action)
                    try:
                        outcome = self.engine.co_simulate(snapshot, robot_intent, person_intent)
                    except SimulationHorizonError as exc:
                        log.warning("co-simulation %s: %s", obj.id, exc)
                        continue
                    # An intervention counts only if the imagined person still
                    # completes the walk without a collision; paralysing them
                    # (goal walled off) is not a cancellation.
                    if outcome.c or not outcome.arrived:
                        continue
                    committed = replace(robot_intent, c=False)
                    version = self._commit_robot_intention(committed, outcome)
                    if self.first_action_version is None:
                        self.first_action_version = version
                    self._handled.update(
                        (int(n.attrs["subject"]), int(n.attrs["target"])) for n in risky
                    )
                    self.committed_actions.append(committed)
                    if on_commit is not None:
                        on_commit(snapshot, committed, person_intent, outcome)
                    return committed
        # Exhausted search: leave the risky pairs unhandled so later sweeps,
        # with updated geometry, try again.
        return None

    def _commit_robot_intention(self, intent: IntentionRecord, outcome: SimOutcome) -> int:
        node_id = self._next_robot
        self._next_robot += 1
        attrs: dict[str, object] = {
            "subject": ROBOT_NODE,
            "target": intent.target,
            "action": intent.action,
            "c": False,
            "goal_x": outcome.robot_goal.x,
            "goal_y": outcome.robot_goal.y,
        }
        return self.wm.transact([
            AddNode(Node(node_id, "intention", attrs)),
            AddEdge(Edge(ROBOT_NODE, node_id, "has_intention")),
            AddEdge(Edge(node_id, intent.target, "approaching")),
        ])

    def reaction_times(self) -> dict[int, float | None]:
        """Wall-clock seconds from each risky commit to the first subsequent
        robot-intention commit, from working-memory version timestamps."""
        risky_first: dict[int, int] = {}
        robot_versions: list[int] = []
        for delta in self.wm.log:
            for edit in delta.edits:
                if isinstance(edit, (AddNode, UpdateNode)):
                    attrs = edit.node.attrs if isinstance(edit, AddNode) else edit.attrs
                    node_id = edit.node.id if isinstance(edit, AddNode) else edit.id
                    if INTENTION_BASE <= node_id < ROBOT_INTENTION_BASE:
                        if attrs.get("c") is True and node_id not in risky_first:
                            risky_first[node_id] = delta.version
                    elif node_id >= ROBOT_INTENTION_BASE and isinstance(edit, AddNode):
                        robot_versions.append(delta.version)
        times = self.wm.version_times
        out: dict[int, float | None] = {}
        for node_id, version in risky_first.items():
            after = [v for v in robot_versions if v > version]
            out[node_id] = times[min(after)] - times[version] if after else None
        return out


def sweep_once(agents: AtmAgents, executive: "RobotExecutive",
               audit: ActionCommitHook | None = None) -> None:
    """One agent cycle: guess intentions, and when fresh risk is pending, search
    for an intervention and hand its goal to the executive."""
    agents.guess_intentions()
    if not agents.pending_risk(agents.wm.snapshot()):
        return
    committed = agents.select_action(on_commit=audit)
    if committed is None:
        return
    snap = agents.wm.snapshot()
    for node in snap.nodes_of_kind("intention"):
        if node.attrs.get("subject") == ROBOT_NODE and "goal_x" in node.attrs:
            executive.set_goal(
                Pose2(float(node.attrs["goal_x"]), float(node.attrs["goal_y"]), 0.0),
                int(node.attrs["target"]),
            )


class RobotExecutive:
    """Drives the real robot toward the goal of a committed intervention.

    A virtual bumper halts the drive whenever the commanded motion would close
    in on a person already inside the safety distance; progress resumes once
    the person clears."""

    def __init__(self, cfg: Config) -> None:
        self.cfg = cfg
        self.goal: Pose2 | None = None
        self.target_id: int | None = None
        self._follower: PurePursuit | None = None
        self._at_plan: dict[int, tuple[float, float]] = {}
        self.arrived = False
        self.current_path: Path | None = None
        self.bumper_m = 1.0

    def set_goal(self, goal: Pose2, target_id: int) -> None:
        self.goal = goal
        self.target_id = target_id
        self._follower = None
        self.arrived = False

    def _world_changed(self, bodies: list[SceneBody]) -> bool:
        eps = self.cfg.person.replan_move_eps_m
        for body in bodies:
            old = self._at_plan.get(body.id)
            if old is None or math.hypot(body.pose.x - old[0], body.pose.y - old[1]) > eps:
                return True
        return False

    def command(self, snapshot: Snapshot, robot_pose: Pose2, robot_radius: float,
                robot_speed: float, robot_accel: float, dt: float) -> tuple[float, float]:
        if self.goal is None or self.arrived:
            return (0.0, 0.0)
        scene = scene_from_snapshot(snapshot)
        bodies = [b for b in scene.objects if b.id != self.target_id] + scene.people
        if self._follower is None or self._world_changed(bodies):
            grid = build_grid(
                robot_planning_obstacles(bodies, {p.id for p in scene.people},
                                         self.cfg.person.margin_m),
                mover_radius=robot_radius,
                bounds=scene.bounds,
                resolution=self.cfg.nav.resolution_m,
                margin=self.cfg.nav.margin_m,
            )
            result = plan(grid, robot_pose, self.goal)
            self._at_plan = {b.id: (b.pose.x, b.pose.y) for b in bodies}
            if isinstance(result, Path):
                self._follower = PurePursuit(result, robot_speed, self.cfg.nav.lookahead_m,
                                             decel=robot_accel)
                self.current_path = result
            elif self._follower is None:
                # Goal transiently unreachable and no plan yet: hold position.
                self.current_path = None
                return (0.0, 0.0)
            # On a failed re-plan with a previous plan in hand, keep following
            # it; the next sweep retries once the scene clears.
        cmd = self._follower.command(robot_pose, dt)
        if cmd is None:
            self.arrived = True
            return (0.0, 0.0)
        for person in scene.people:
            dx = person.pose.x - robot_pose.x
            dy = person.pose.y - robot_pose.y
            if math.hypot(dx, dy) < self.bumper_m and cmd[0] * dx + cmd[1] * dy > 0.0:
                return (0.0, 0.0)
        return cmd
