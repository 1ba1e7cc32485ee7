"""Planar geometry: SE(2) poses, body footprints, view frustums and swept-disc
collision tests shared by the world, the navigation stack and the internal
simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass


def normalize_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2:
    """SE(2) pose. theta is always stored normalized to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Compose two SE(2) transforms: the pose of frame b expressed through frame a."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.theta + b.theta,
    )


def inverse(p: Pose2) -> Pose2:
    """Inverse transform, so compose(p, inverse(p)) is the identity."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose2(-c * p.x - s * p.y, s * p.x - c * p.y, -p.theta)


def transform_point(p: Pose2, x: float, y: float) -> tuple[float, float]:
    """Map a point from the local frame of p into the world frame."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return (p.x + c * x - s * y, p.y + s * x + c * y)


def relative_pose(reference: Pose2, target: Pose2) -> Pose2:
    """Pose of target expressed in the frame of reference."""
    return compose(inverse(reference), target)


@dataclass(frozen=True)
class Circle:
    """Disc footprint. height is the top of the body above the floor."""

    radius: float
    height: float = 0.0

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError(f"circle radius must be > 0, got {self.radius}")
        if self.height < 0.0:
            raise ValueError(f"height must be >= 0, got {self.height}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box footprint in its own frame (half extents)."""

    half_x: float
    half_y: float
    height: float = 0.0

    def __post_init__(self) -> None:
        if self.half_x <= 0.0 or self.half_y <= 0.0:
            raise ValueError(f"box extents must be > 0, got {self.half_x}x{self.half_y}")
        if self.height < 0.0:
            raise ValueError(f"height must be >= 0, got {self.height}")


Shape = Circle | Box


@dataclass(frozen=True)
class Frustum:
    """A person's view volume: horizontal sector plus a vertical gaze cutoff.

    half_angle bounds the bearing from the observer heading, range the planar
    distance, and gaze_depression the angle below horizontal within which
    floor-level bodies are noticed.
    """

    half_angle: float
    range: float
    gaze_depression: float

    def __post_init__(self) -> None:
        if not 0.0 < self.half_angle <= math.pi:
            raise ValueError(f"half_angle must be in (0, pi], got {self.half_angle}")
        if self.range <= 0.0:
            raise ValueError(f"range must be > 0, got {self.range}")
        if not 0.0 <= self.gaze_depression < math.pi / 2:
            raise ValueError(f"gaze_depression must be in [0, pi/2), got {self.gaze_depression}")


def footprint_distance(x: float, y: float, pose: Pose2, shape: Shape) -> float:
    """Planar distance from a point to a footprint boundary, 0.0 inside it."""
    if isinstance(shape, Circle):
        d = math.hypot(x - pose.x, y - pose.y) - shape.radius
        return d if d > 0.0 else 0.0
    # Box: evaluate in the box frame, clamp to the extents.
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx, dy = x - pose.x, y - pose.y
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    ex = abs(lx) - shape.half_x
    ey = abs(ly) - shape.half_y
    if ex <= 0.0 and ey <= 0.0:
        return 0.0
    return math.hypot(max(ex, 0.0), max(ey, 0.0))


def disc_overlaps(x: float, y: float, radius: float, pose: Pose2, shape: Shape) -> bool:
    """True iff a disc centred at (x, y) strictly overlaps the footprint."""
    return footprint_distance(x, y, pose, shape) < radius


def in_frustum(
    observer: Pose2,
    eye_height: float,
    frustum: Frustum,
    body_pose: Pose2,
    body: Shape,
) -> bool:
    """Geometric inclusion test for a body in an observer's view frustum.

    The test is centre-to-centre in the plane:
      (a) planar distance <= range,
      (b) bearing from the observer heading within +/- half_angle,
      (c) depression angle to the body top, atan2(eye_height - body.height, d),
          within the gaze cutoff; bodies at least as tall as the eye pass
          unconditionally.
    A body at zero distance is visible by convention.
    """
    dx = body_pose.x - observer.x
    dy = body_pose.y - observer.y
    d = math.hypot(dx, dy)
    if d == 0.0:
        return True
    if d > frustum.range:
        return False
    bearing = normalize_angle(math.atan2(dy, dx) - observer.theta)
    if abs(bearing) > frustum.half_angle:
        return False
    if body.height >= eye_height:
        return True
    depression = math.atan2(eye_height - body.height, d)
    return depression <= frustum.gaze_depression


def polyline_length(points: list[Pose2] | list[tuple[float, float]]) -> float:
    """Total arc length of a polyline of poses or (x, y) pairs."""
    total = 0.0
    for a, b in zip(points, points[1:]):
        ax, ay = (a.x, a.y) if isinstance(a, Pose2) else (a[0], a[1])
        bx, by = (b.x, b.y) if isinstance(b, Pose2) else (b[0], b[1])
        total += math.hypot(bx - ax, by - ay)
    return total


def swept_collision(
    path: list[Pose2],
    mover: Shape,
    obstacles: list[tuple[Pose2, Shape]],
    step: float = 0.05,
) -> tuple[float, int] | None:
    """First contact of a disc swept along a polyline against static footprints.

    Walks the path at arc-length increments <= step (endpoints always sampled)
    and returns (arc_length, obstacle_index) at the first strict overlap of the
    mover's disc with any obstacle footprint, or None if the sweep is clear.

    The mover must be a circle; an empty path is an error.
    """
    if not path:
        raise ValueError("empty path")
    if not isinstance(mover, Circle):
        raise ValueError("swept mover must be a circle")
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")

    def check(x: float, y: float) -> int | None:
        for idx, (opose, oshape) in enumerate(obstacles):
            if disc_overlaps(x, y, mover.radius, opose, oshape):
                return idx
        return None

    hit = check(path[0].x, path[0].y)
    if hit is not None:
        return (0.0, hit)

    arc = 0.0
    for a, b in zip(path, path[1:]):
        seg = math.hypot(b.x - a.x, b.y - a.y)
        if seg == 0.0:
            continue
        n = max(1, math.ceil(seg / step))
        for k in range(1, n + 1):
            t = k / n
            s = arc + seg * t
            hit = check(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
            if hit is not None:
                return (s, hit)
        arc += seg
    return None
