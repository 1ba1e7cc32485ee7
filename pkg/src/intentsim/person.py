"""Gaze-limited walking model for people.

A walker plans to a standoff point near its target over a grid containing only
the bodies it has noticed within its view frustum, follows the plan with pure
pursuit, and re-plans whenever something new enters the frustum or a watched
body has moved. The ground-truth world drives scripted people with this model,
and the internal simulator drives imagined people with the very same code, so
the two can only diverge through their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import NavConfig
from .geometry import Circle, Frustum, Pose2, Shape, in_frustum, transform_point
from .navigation import GridBounds, Path, PurePursuit, Unreachable, build_grid, plan


@dataclass(frozen=True)
class SceneBody:
    id: int
    pose: Pose2
    shape: Shape


def standoff_point(
    target_pose: Pose2,
    target_shape: Shape,
    from_x: float,
    from_y: float,
    clearance: float,
) -> Pose2:
    """Standing position next to a target: the boundary point facing (from_x,
    from_y), pushed out by clearance, oriented toward the target."""
    if isinstance(target_shape, Circle):
        dx, dy = from_x - target_pose.x, from_y - target_pose.y
        d = math.hypot(dx, dy)
        ux, uy = (dx / d, dy / d) if d > 1e-9 else (1.0, 0.0)
        gx = target_pose.x + (target_shape.radius + clearance) * ux
        gy = target_pose.y + (target_shape.radius + clearance) * uy
    else:
        c, s = math.cos(target_pose.theta), math.sin(target_pose.theta)
        dx, dy = from_x - target_pose.x, from_y - target_pose.y
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        cx = min(max(lx, -target_shape.half_x), target_shape.half_x)
        cy = min(max(ly, -target_shape.half_y), target_shape.half_y)
        ox, oy = lx - cx, ly - cy
        d = math.hypot(ox, oy)
        if d > 1e-9:
            ux, uy = ox / d, oy / d
        else:
            # Inside the footprint: push out along the dominant local axis.
            ux, uy = (1.0, 0.0) if abs(lx) >= abs(ly) else (0.0, 1.0)
        gx, gy = transform_point(target_pose, cx + clearance * ux, cy + clearance * uy)
    theta = math.atan2(target_pose.y - gy, target_pose.x - gx)
    return Pose2(gx, gy, theta)


@dataclass
class WalkerDebug:
    planned: Path | Unreachable | None = None
    replanned: bool = False
    plans: int = 0


class GazeLimitedWalker:
    """One person's controller; call command() once per tick."""

    def __init__(
        self,
        *,
        body_radius: float,
        speed: float,
        frustum: Frustum,
        eye_height: float,
        clearance_margin: float,
        target_id: int,
        target_pose: Pose2,
        target_shape: Shape,
        nav: NavConfig,
        bounds: GridBounds,
        standoff_gap: float = 0.1,
        move_eps: float = 0.10,
        decel: float | None = None,
    ) -> None:
        self.body_radius = body_radius
        self.speed = speed
        self.frustum = frustum
        self.eye_height = eye_height
        self.clearance_margin = clearance_margin
        self.target_id = target_id
        self.target_pose = target_pose
        self.target_shape = target_shape
        self.nav = nav
        self.bounds = bounds
        self.standoff_gap = standoff_gap
        self.move_eps = move_eps
        self.decel = decel

        self.goal: Pose2 | None = None
        self.arrived = False
        self.blocked = False
        self.debug = WalkerDebug()
        self._seen: dict[int, SceneBody] = {}
        self._at_plan: dict[int, tuple[float, float]] = {}
        self._follower: PurePursuit | None = None

    @property
    def seen_ids(self) -> frozenset[int]:
        return frozenset(self._seen)

    def visible_ids(self, pose: Pose2, bodies: list[SceneBody]) -> list[int]:
        return [
            b.id for b in bodies
            if b.id != self.target_id
            and in_frustum(pose, self.eye_height, self.frustum, b.pose, b.shape)
        ]

    def _needs_replan(self, pose: Pose2, bodies: list[SceneBody]) -> bool:
        changed = self._follower is None and not self.blocked
        for body in bodies:
            if body.id == self.target_id:
                continue
            if not in_frustum(pose, self.eye_height, self.frustum, body.pose, body.shape):
                continue
            if body.id not in self._seen:
                changed = True
            else:
                # Compare against where the body was when the current plan was
                # made, not last tick, so slow drift still triggers a re-plan.
                ref = self._at_plan.get(body.id, (body.pose.x, body.pose.y))
                if math.hypot(body.pose.x - ref[0], body.pose.y - ref[1]) > self.move_eps:
                    changed = True
            self._seen[body.id] = body
        return changed

    def _replan(self, pose: Pose2) -> None:
        self._at_plan = {bid: (b.pose.x, b.pose.y) for bid, b in self._seen.items()}
        obstacles = [(b.pose, b.shape) for b in sorted(self._seen.values(), key=lambda b: b.id)]
        grid = build_grid(
            obstacles,
            mover_radius=self.body_radius,
            bounds=self.bounds,
            resolution=self.nav.resolution_m,
            margin=self.clearance_margin,
        )
        if self.goal is None:
            self.goal = standoff_point(
                self.target_pose, self.target_shape, pose.x, pose.y, self.standoff_gap,
            )
        result = plan(grid, pose, self.goal)
        self.debug.planned = result
        self.debug.plans += 1
        if isinstance(result, Path):
            self._follower = PurePursuit(result, self.speed, self.nav.lookahead_m,
                                         decel=self.decel)
            self.blocked = False
        else:
            self._follower = None
            self.blocked = True

    def command(self, pose: Pose2, bodies: list[SceneBody], dt: float) -> tuple[float, float]:
        """World-frame velocity command for this tick; (0, 0) when idle."""
        if self.arrived:
            return (0.0, 0.0)
        if self._needs_replan(pose, bodies):
            had_plan = self._follower is not None
            self._replan(pose)
            if had_plan:
                self.debug.replanned = True
        if self._follower is None:
            return (0.0, 0.0)
        cmd = self._follower.command(pose, dt)
        if cmd is None:
            self.arrived = True
            return (0.0, 0.0)
        return cmd
