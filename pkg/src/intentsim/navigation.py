"""Local navigation: occupancy-grid construction, 8-connected grid search with
deterministic tie-breaking, line-of-sight shortcutting, and a pure-pursuit
waypoint follower. The same stack drives the real robot and the internally
simulated people."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, Circle, Pose2, Shape, polyline_length

SQRT2 = math.sqrt(2.0)

# Diagonal moves are allowed only when both adjacent cardinal cells are free,
# so a path can never cut the corner of an obstacle cell.
_NEIGHBOURS = (
    (1, 0, False), (-1, 0, False), (0, 1, False), (0, -1, False),
    (1, 1, True), (1, -1, True), (-1, 1, True), (-1, -1, True),
)


@dataclass
class GridBounds:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self) -> None:
        if self.max_x <= self.min_x or self.max_y <= self.min_y:
            raise ValueError(f"degenerate bounds {self}")


@dataclass
class OccupancyGrid:
    """Boolean occupancy over a regular grid; cells[iy, ix] True means blocked."""

    origin: Pose2
    resolution: float
    width: int
    height: int
    cells: np.ndarray

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = int(math.floor((x - self.origin.x) / self.resolution))
        iy = int(math.floor((y - self.origin.y) / self.resolution))
        return ix, iy

    def centre_of(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin.x + (ix + 0.5) * self.resolution,
            self.origin.y + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def free(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and not bool(self.cells[iy, ix])


@dataclass
class Path:
    waypoints: list[Pose2]
    total_length: float


@dataclass
class Unreachable:
    """Planning failure, distinguishing a blocked endpoint from a missing route."""

    reason: str  # "start_blocked" | "goal_blocked" | "no_route"


def build_grid(
    obstacles: list[tuple[Pose2, Shape]],
    mover_radius: float,
    bounds: GridBounds,
    resolution: float,
    margin: float = 0.05,
    wall_inflation: bool = True,
) -> OccupancyGrid:
    """Rasterize obstacle footprints inflated by mover_radius + margin.

    A cell is occupied iff its centre lies within the inflated distance of some
    footprint. With wall_inflation, a band along the bounds of the same width
    is also occupied so paths keep the mover's body inside the bounds.
    """
    if resolution <= 0.0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    width = max(1, int(math.ceil((bounds.max_x - bounds.min_x) / resolution)))
    height = max(1, int(math.ceil((bounds.max_y - bounds.min_y) / resolution)))
    xs = bounds.min_x + (np.arange(width) + 0.5) * resolution
    ys = bounds.min_y + (np.arange(height) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    occupied = np.zeros((height, width), dtype=bool)
    inflate = mover_radius + margin

    for pose, shape in obstacles:
        if isinstance(shape, Circle):
            r = shape.radius + inflate
            occupied |= (gx - pose.x) ** 2 + (gy - pose.y) ** 2 <= r * r
        else:
            assert isinstance(shape, Box)
            c, s = math.cos(pose.theta), math.sin(pose.theta)
            dx, dy = gx - pose.x, gy - pose.y
            lx = c * dx + s * dy
            ly = -s * dx + c * dy
            ex = np.maximum(np.abs(lx) - shape.half_x, 0.0)
            ey = np.maximum(np.abs(ly) - shape.half_y, 0.0)
            occupied |= ex * ex + ey * ey <= inflate * inflate

    if wall_inflation:
        occupied |= gx - bounds.min_x < inflate
        occupied |= bounds.max_x - gx < inflate
        occupied |= gy - bounds.min_y < inflate
        occupied |= bounds.max_y - gy < inflate

    return OccupancyGrid(
        origin=Pose2(bounds.min_x, bounds.min_y, 0.0),
        resolution=resolution,
        width=width,
        height=height,
        cells=occupied,
    )


def _snap_to_free(grid: OccupancyGrid, x: float, y: float, radius: float = 0.3) -> tuple[int, int] | None:
    """Nearest free cell to (x, y) within radius, or None."""
    ix0, iy0 = grid.cell_of(x, y)
    span = int(math.ceil(radius / grid.resolution))
    best: tuple[float, int, int] | None = None
    for iy in range(iy0 - span, iy0 + span + 1):
        for ix in range(ix0 - span, ix0 + span + 1):
            if not grid.free(ix, iy):
                continue
            cx, cy = grid.centre_of(ix, iy)
            d = math.hypot(cx - x, cy - y)
            if d <= radius and (best is None or (d, ix, iy) < best):
                best = (d, ix, iy)
    if best is None:
        return None
    return best[1], best[2]


def grid_search(
    grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int]
) -> tuple[list[tuple[int, int]], int, int] | None:
    """Minimal-cost 8-connected path between cells (unit straight, sqrt(2) diagonal).

    Returns (cells, straight_steps, diagonal_steps) so the exact cost
    straight + sqrt(2) * diagonal can be compared against an oracle, or None if
    no route exists. Ties break lexicographically on (g, heuristic, cell index)
    for determinism.
    """
    if start == goal:
        return ([start], 0, 0)
    width = grid.width

    def heuristic(ix: int, iy: int) -> float:
        dx = abs(ix - goal[0])
        dy = abs(iy - goal[1])
        return (max(dx, dy) - min(dx, dy)) + SQRT2 * min(dx, dy)

    # g-costs tracked as exact (straight, diagonal) step counts.
    start_idx = start[1] * width + start[0]
    counts: dict[int, tuple[int, int]] = {start_idx: (0, 0)}
    came: dict[int, int] = {}
    open_heap: list[tuple[float, float, float, int]] = []
    heapq.heappush(open_heap, (heuristic(*start), 0.0, heuristic(*start), start_idx))
    closed: set[int] = set()
    goal_idx = goal[1] * width + goal[0]

    while open_heap:
        _, g_pop, _, idx = heapq.heappop(open_heap)
        if idx in closed:
            continue
        closed.add(idx)
        if idx == goal_idx:
            cells: list[tuple[int, int]] = []
            cur = idx
            while True:
                cells.append((cur % width, cur // width))
                if cur == start_idx:
                    break
                cur = came[cur]
            cells.reverse()
            a, b = counts[goal_idx]
            return (cells, a, b)
        ix, iy = idx % width, idx // width
        a, b = counts[idx]
        for dx, dy, diag in _NEIGHBOURS:
            nx, ny = ix + dx, iy + dy
            if not grid.free(nx, ny):
                continue
            if diag and not (grid.free(ix + dx, iy) and grid.free(ix, iy + dy)):
                continue
            na, nb = (a, b + 1) if diag else (a + 1, b)
            ng = na + SQRT2 * nb
            nidx = ny * width + nx
            old = counts.get(nidx)
            if old is None or ng < old[0] + SQRT2 * old[1]:
                counts[nidx] = (na, nb)
                came[nidx] = idx
                h = heuristic(nx, ny)
                heapq.heappush(open_heap, (ng + h, ng, h, nidx))
    return None


def _line_of_sight(grid: OccupancyGrid, a: tuple[float, float], b: tuple[float, float]) -> bool:
    """True iff the segment a-b stays in free cells, sampled at half resolution."""
    dist = math.hypot(b[0] - a[0], b[1] - a[1])
    n = max(1, int(math.ceil(dist / (grid.resolution * 0.5))))
    for k in range(n + 1):
        t = k / n
        x = a[0] + (b[0] - a[0]) * t
        y = a[1] + (b[1] - a[1]) * t
        ix, iy = grid.cell_of(x, y)
        if not grid.free(ix, iy):
            return False
    return True


def _shortcut(grid: OccupancyGrid, points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Greedy line-of-sight decimation; never enters occupied cells."""
    if len(points) <= 2:
        return points
    out = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not _line_of_sight(grid, points[i], points[j]):
            j -= 1
        out.append(points[j])
        i = j
    return out


def plan(grid: OccupancyGrid, start: Pose2, goal: Pose2) -> Path | Unreachable:
    """Plan a collision-free path from start to goal on the grid.

    Start and goal snap to the nearest free cell within 0.3 m; the exact goal
    point is kept as the final waypoint when its own cell is free. The raw grid
    path is decimated by line-of-sight shortcutting.
    """
    s = _snap_to_free(grid, start.x, start.y)
    if s is None:
        return Unreachable("start_blocked")
    g = _snap_to_free(grid, goal.x, goal.y)
    if g is None:
        return Unreachable("goal_blocked")
    result = grid_search(grid, s, g)
    if result is None:
        return Unreachable("no_route")
    cells, _, _ = result
    points = [grid.centre_of(ix, iy) for ix, iy in cells]
    gi = grid.cell_of(goal.x, goal.y)
    if grid.free(*gi):
        points.append((goal.x, goal.y))
    points = _shortcut(grid, points)
    waypoints = [Pose2(x, y, 0.0) for x, y in points]
    # Orient each waypoint along the outgoing segment.
    oriented: list[Pose2] = []
    for idx, wp in enumerate(waypoints):
        nxt = waypoints[idx + 1] if idx + 1 < len(waypoints) else None
        if nxt is not None and (nxt.x != wp.x or nxt.y != wp.y):
            theta = math.atan2(nxt.y - wp.y, nxt.x - wp.x)
        elif oriented:
            theta = oriented[-1].theta
        else:
            theta = start.theta
        oriented.append(Pose2(wp.x, wp.y, theta))
    return Path(waypoints=oriented, total_length=polyline_length(oriented))


@dataclass
class PurePursuit:
    """Constant-speed waypoint follower with a fixed lookahead point.

    command() returns a world-frame velocity; None once the follower has
    terminated near the final waypoint. A decel bound, when given, tapers the
    commanded speed near the goal so an inertia-limited body cannot orbit it.
    """

    path: Path
    speed: float
    lookahead: float = 0.3
    decel: float | None = None
    _progress: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if not self.path.waypoints:
            raise ValueError("empty path")
        if self.speed <= 0.0:
            raise ValueError(f"speed must be > 0, got {self.speed}")
        self._cum = [0.0]
        pts = self.path.waypoints
        for a, b in zip(pts, pts[1:]):
            self._cum.append(self._cum[-1] + math.hypot(b.x - a.x, b.y - a.y))

    @property
    def done_threshold(self) -> float:
        return min(0.05, self.speed * 0.025)

    def _point_at(self, s: float) -> tuple[float, float]:
        pts = self.path.waypoints
        if s <= 0.0:
            return (pts[0].x, pts[0].y)
        if s >= self._cum[-1]:
            return (pts[-1].x, pts[-1].y)
        for i in range(1, len(self._cum)):
            if s <= self._cum[i]:
                seg = self._cum[i] - self._cum[i - 1]
                t = 0.0 if seg == 0.0 else (s - self._cum[i - 1]) / seg
                a, b = pts[i - 1], pts[i]
                return (a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
        return (pts[-1].x, pts[-1].y)

    def _nearest_progress(self, x: float, y: float) -> float:
        """Arc length of the nearest path point at or after current progress."""
        pts = self.path.waypoints
        best_s = self._progress
        best_d = None
        for i in range(1, len(pts)):
            a, b = pts[i - 1], pts[i]
            seg = self._cum[i] - self._cum[i - 1]
            if seg == 0.0:
                continue
            t = ((x - a.x) * (b.x - a.x) + (y - a.y) * (b.y - a.y)) / (seg * seg)
            t = min(1.0, max(0.0, t))
            s = self._cum[i - 1] + t * seg
            if s < self._progress:
                continue
            px, py = a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t
            d = math.hypot(px - x, py - y)
            if best_d is None or d < best_d:
                best_d = d
                best_s = s
        return best_s

    def command(self, pose: Pose2, dt: float) -> tuple[float, float] | None:
        end = self.path.waypoints[-1]
        remaining_direct = math.hypot(end.x - pose.x, end.y - pose.y)
        if remaining_direct <= self.done_threshold:
            return None
        self._progress = self._nearest_progress(pose.x, pose.y)
        tx, ty = self._point_at(self._progress + self.lookahead)
        dx, dy = tx - pose.x, ty - pose.y
        d = math.hypot(dx, dy)
        if d == 0.0:
            return None
        magnitude = min(self.speed, remaining_direct / dt)
        if self.decel is not None and self.decel > 0.0:
            magnitude = min(magnitude, math.sqrt(2.0 * self.decel * remaining_direct))
        return (dx / d * magnitude, dy / d * magnitude)
