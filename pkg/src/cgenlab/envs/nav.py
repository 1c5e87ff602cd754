"""
Top-view navigation micro-world.

A robot circles a square platform, visiting the inset corners clockwise,
while avoiding cones (discs) and barriers (thick segments). Images are
robot-centered and heading-up: the robot frame has ``x`` to the right and
``y`` forward, which is image-up.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Annotated

import numpy as np
from pydantic import Field, validate_call

from cgenlab.autodiff.rng import sample_rng
from cgenlab.config.constants import (
    DatasetSplit,
    EnvName,
    NavComplexity,
    NavDefaults,
    ObstacleKind,
    ShapesDefaults,
)
from cgenlab.envs.raster import composite, pixel_centers, soft_step
from cgenlab.envs.shapes import split_tags
from cgenlab.errors import ConfigurationError, DemonstrationFailureError
from cgenlab.schemas.envs.scenes import (
    DemonstrationLabel,
    NavScene,
    Obstacle,
    Pose,
    circuit_waypoints,
)

logger = logging.getLogger(__name__)

Vec = tuple[float, float]

_TIE = 1e-9
_TANGENT_GAIN = 1.5


# ----------------------------------------------------------------------------
# Frames
# ----------------------------------------------------------------------------


def _axes(heading: float) -> tuple[Vec, Vec]:
    """World directions of the robot's right and forward axes."""
    forward = (math.cos(heading), math.sin(heading))
    right = (forward[1], -forward[0])
    return right, forward


def world_to_robot(pose: Pose, wx: float, wy: float) -> Vec:
    """Robot-frame coordinates (right, forward) of a world point."""
    right, forward = _axes(pose.heading)
    dx, dy = wx - pose.x, wy - pose.y
    return dx * right[0] + dy * right[1], dx * forward[0] + dy * forward[1]


def robot_to_world(pose: Pose, rx: float, ry: float) -> Vec:
    """World coordinates of a robot-frame point."""
    right, forward = _axes(pose.heading)
    return (
        pose.x + rx * right[0] + ry * forward[0],
        pose.y + rx * right[1] + ry * forward[1],
    )


def robot_to_pixel(rx: float, ry: float, size: int = NavDefaults.IMAGE_SIZE) -> Vec:
    """Continuous (row, col) of a robot-frame point."""
    scale = NavDefaults.PIXELS_PER_UNIT
    return size / 2 - ry * scale, size / 2 + rx * scale


def view_half_extent(size: int = NavDefaults.IMAGE_SIZE) -> float:
    """Half width of the rendered view in world units."""
    return size / 2 / NavDefaults.PIXELS_PER_UNIT


# ----------------------------------------------------------------------------
# Rendering
# ----------------------------------------------------------------------------


def _segment_distance(
    px: np.ndarray,
    py: np.ndarray,
    a: Vec,
    b: Vec,
) -> np.ndarray:
    vx, vy = b[0] - a[0], b[1] - a[1]
    length2 = vx * vx + vy * vy
    if length2 == 0:
        return np.hypot(px - a[0], py - a[1])
    t = np.clip(((px - a[0]) * vx + (py - a[1]) * vy) / length2, 0.0, 1.0)
    return np.hypot(px - (a[0] + t * vx), py - (a[1] + t * vy))


def render_nav(scene: NavScene, *, size: int = NavDefaults.IMAGE_SIZE) -> np.ndarray:
    """Robot-centered, heading-aligned top view in [0, 1]."""
    scale = NavDefaults.PIXELS_PER_UNIT
    rows, cols = pixel_centers(size)
    rx = (cols - size / 2) / scale + np.zeros_like(rows)
    ry = (size / 2 - rows) / scale + np.zeros_like(cols)
    right, forward = _axes(scene.pose.heading)
    wx = scene.pose.x + rx * right[0] + ry * forward[0]
    wy = scene.pose.y + rx * right[1] + ry * forward[1]

    platform = NavDefaults.PLATFORM_SIZE
    inside = np.minimum(np.minimum(wx, platform - wx), np.minimum(wy, platform - wy))
    image = composite(
        np.full((size, size), NavDefaults.OFF_PLATFORM_INTENSITY),
        soft_step(-inside, scale),
        NavDefaults.FLOOR_INTENSITY,
    )
    edge = soft_step(np.abs(inside) - NavDefaults.EDGE_WIDTH, scale)
    image = composite(image, edge, NavDefaults.EDGE_INTENSITY)

    for obstacle in scene.obstacles:
        a, b = obstacle.endpoints()
        dist = _segment_distance(wx, wy, a, b)
        if obstacle.kind == ObstacleKind.CONE:
            cover = soft_step(dist - obstacle.size, scale)
            image = composite(image, cover, NavDefaults.CONE_INTENSITY)
        else:
            cover = soft_step(dist - NavDefaults.BARRIER_THICKNESS / 2, scale)
            image = composite(image, cover, NavDefaults.BARRIER_INTENSITY)
    return np.clip(image, 0.0, 1.0).astype(np.float32)


# ----------------------------------------------------------------------------
# Scripted demonstrator
# ----------------------------------------------------------------------------


def _normalize(v: Vec) -> Vec:
    norm = math.hypot(v[0], v[1])
    if norm == 0:
        return 0.0, 0.0
    return v[0] / norm, v[1] / norm


def _avoidance(
    obstacle: Obstacle,
    position: Vec,
    goal_dir: Vec,
) -> Vec:
    """Repulsive plus tangential push of one obstacle (zero outside its range)."""
    a, b = obstacle.endpoints()
    ax, ay = a
    vx, vy = b[0] - a[0], b[1] - a[1]
    length2 = vx * vx + vy * vy
    t = 0.0
    if length2 > 0:
        proj = (position[0] - ax) * vx + (position[1] - ay) * vy
        t = min(1.0, max(0.0, proj / length2))
    cx, cy = ax + t * vx, ay + t * vy
    dist = math.hypot(position[0] - cx, position[1] - cy)

    if obstacle.kind == ObstacleKind.CONE:
        contact = obstacle.size + NavDefaults.ROBOT_RADIUS
        reach = contact + NavDefaults.CONE_REPULSION
    else:
        contact = NavDefaults.BARRIER_THICKNESS / 2 + NavDefaults.ROBOT_RADIUS
        reach = contact + NavDefaults.BARRIER_CLEARANCE
    if dist >= reach:
        return 0.0, 0.0

    strength = (reach - dist) / (reach - contact)
    away = _normalize((position[0] - cx, position[1] - cy))
    if away == (0.0, 0.0):
        away = (-goal_dir[0], -goal_dir[1])

    if obstacle.kind == ObstacleKind.CONE:
        tangent = (away[1], -away[0])
    else:
        tangent = _normalize((vx, vy))
    # slide toward the goal side; dead-ahead ties go right of the goal direction
    along = tangent[0] * goal_dir[0] + tangent[1] * goal_dir[1]
    if abs(along) < _TIE:
        along = tangent[0] * goal_dir[1] - tangent[1] * goal_dir[0]
    if along < 0:
        tangent = (-tangent[0], -tangent[1])
    push = strength * _TANGENT_GAIN
    return (
        strength * away[0] + push * tangent[0],
        strength * away[1] + push * tangent[1],
    )


@dataclass
class _Walker:
    x: float
    y: float
    waypoint: int


def _velocity(scene: NavScene, walker: _Walker) -> Vec:
    wx, wy = scene.waypoints[walker.waypoint]
    goal_dir = _normalize((wx - walker.x, wy - walker.y))
    vx, vy = goal_dir
    for obstacle in scene.obstacles:
        px, py = _avoidance(obstacle, (walker.x, walker.y), goal_dir)
        vx += px
        vy += py
    direction = _normalize((vx, vy))
    if direction == (0.0, 0.0):
        direction = (goal_dir[1], -goal_dir[0])
    return NavDefaults.SPEED * direction[0], NavDefaults.SPEED * direction[1]


def simulate_demo(
    scene: NavScene,
    *,
    seconds: float,
) -> list[Vec]:
    """World positions at every whole second up to ``seconds``."""
    dt = NavDefaults.SIM_DT
    steps_per_second = round(1.0 / dt)
    walker = _Walker(scene.pose.x, scene.pose.y, scene.waypoint_index)
    tolerance = NavDefaults.WAYPOINT_TOLERANCE
    window_steps = round(NavDefaults.STUCK_WINDOW_S / dt)

    first_x, first_y = scene.waypoints[walker.waypoint]
    best = math.hypot(walker.x - first_x, walker.y - first_y)
    last_progress = 0
    samples: list[Vec] = []
    total_steps = round(seconds * steps_per_second)
    for step in range(1, total_steps + 1):
        vx, vy = _velocity(scene, walker)
        walker.x += vx * dt
        walker.y += vy * dt
        wx, wy = scene.waypoints[walker.waypoint]
        dist = math.hypot(walker.x - wx, walker.y - wy)
        if dist <= tolerance:
            walker.waypoint = (walker.waypoint + 1) % len(scene.waypoints)
            nx, ny = scene.waypoints[walker.waypoint]
            best = math.hypot(walker.x - nx, walker.y - ny)
            last_progress = step
        elif dist <= best - NavDefaults.MIN_PROGRESS:
            best = dist
            last_progress = step
        if step - last_progress >= window_steps:
            msg = (
                f"planner made no progress for {NavDefaults.STUCK_WINDOW_S:.0f} s "
                f"near ({walker.x:.2f}, {walker.y:.2f})"
            )
            raise DemonstrationFailureError(msg)
        if step % steps_per_second == 0:
            samples.append((walker.x, walker.y))
    return samples


def scripted_mpc_demo(
    scene: NavScene,
    horizon: int = NavDefaults.HORIZON_STEPS,
) -> DemonstrationLabel:
    """
    Future positions at t+1 … t+horizon seconds in the robot frame at t.

    The planner is simulated for the full stuck window so that scenes where
    it stalls are rejected even when the stall starts after the horizon.
    """
    seconds = max(float(horizon), NavDefaults.STUCK_WINDOW_S)
    positions = simulate_demo(scene, seconds=seconds)[:horizon]
    limit = view_half_extent()
    values: list[float] = []
    clamped = False
    for wx, wy in positions:
        rx, ry = world_to_robot(scene.pose, wx, wy)
        cx, cy = min(max(rx, -limit), limit), min(max(ry, -limit), limit)
        clamped = clamped or (cx, cy) != (rx, ry)
        values += [cx, cy]
    return DemonstrationLabel(future_positions=tuple(values), clamped=clamped)


@validate_call
def goal_from_angle(
    angle_deg: Annotated[
        float,
        Field(ge=-NavDefaults.MAX_GOAL_DEG, le=NavDefaults.MAX_GOAL_DEG),
    ],
) -> np.ndarray:
    """Straight constant-speed trajectory at ``angle_deg`` from image-vertical."""
    theta = math.radians(angle_deg)
    k = np.arange(1, NavDefaults.HORIZON_STEPS + 1, dtype=np.float64)
    step = NavDefaults.SPEED * NavDefaults.STEP_SECONDS
    pairs = np.stack([k * step * math.sin(theta), k * step * math.cos(theta)], axis=1)
    return pairs.reshape(-1)


# ----------------------------------------------------------------------------
# Scene sampling
# ----------------------------------------------------------------------------


def _sample_obstacles(
    rng: np.random.Generator,
    complexity: NavComplexity,
    start: Vec,
    goal: Vec,
) -> list[Obstacle]:
    if complexity == NavComplexity.EMPTY:
        return []
    n_cones = int(rng.integers(0, NavDefaults.MAX_CONES + 1))
    n_barriers = 0
    if complexity == NavComplexity.FULL:
        n_barriers = int(rng.integers(0, NavDefaults.MAX_BARRIERS + 1))

    path = (goal[0] - start[0], goal[1] - start[1])
    length = math.hypot(*path)
    ux, uy = _normalize(path)
    nx, ny = uy, -ux
    platform = NavDefaults.PLATFORM_SIZE
    obstacles: list[Obstacle] = []
    kinds = [ObstacleKind.CONE] * n_cones + [ObstacleKind.BARRIER] * n_barriers
    for kind in kinds:
        near = NavDefaults.MIN_OBSTACLE_CLEARANCE
        along = float(rng.uniform(near, max(length, near + 0.1)))
        corridor = NavDefaults.OBSTACLE_CORRIDOR
        lateral = float(rng.uniform(-corridor, corridor))
        x = min(max(start[0] + along * ux + lateral * nx, 0.0), platform)
        y = min(max(start[1] + along * uy + lateral * ny, 0.0), platform)
        if kind == ObstacleKind.CONE:
            cone = Obstacle(kind=kind, x=x, y=y, size=NavDefaults.CONE_RADIUS)
            obstacles.append(cone)
        else:
            across = math.atan2(ny, nx) + float(rng.uniform(-0.5, 0.5))
            obstacles.append(
                Obstacle(
                    kind=kind,
                    x=x,
                    y=y,
                    orientation=across,
                    size=NavDefaults.BARRIER_LENGTH,
                ),
            )
    return obstacles


def sample_nav_scene(rng: np.random.Generator, complexity: NavComplexity) -> NavScene:
    """A pose along the circuit heading roughly to its waypoint, plus obstacles."""
    waypoints = circuit_waypoints()
    index = int(rng.integers(0, len(waypoints)))
    ax, ay = waypoints[index - 1]
    bx, by = waypoints[index]
    t = float(rng.uniform(0.05, 0.5))
    ux, uy = _normalize((bx - ax, by - ay))
    lateral = float(rng.uniform(-0.1, 0.1))
    x = ax + t * (bx - ax) + lateral * uy
    y = ay + t * (by - ay) - lateral * ux
    spread = NavDefaults.HEADING_NOISE_DEG
    noise = math.radians(float(rng.uniform(-spread, spread)))
    heading = math.atan2(by - y, bx - x) + noise
    obstacles = _sample_obstacles(rng, complexity, (x, y), (bx, by))
    return NavScene(
        pose=Pose(x=x, y=y, heading=heading),
        waypoints=waypoints,
        waypoint_index=index,
        obstacles=tuple(obstacles),
        complexity=complexity,
    )


@dataclass(frozen=True)
class NavDataset:
    """Rendered views, 10-D demonstration labels and their scenes."""

    images: np.ndarray
    labels: np.ndarray
    scenes: list[NavScene]
    splits: list[DatasetSplit]
    resampled: int


def _nav_sample(
    seed: int,
    index: int,
    complexity: NavComplexity,
) -> tuple[NavScene, DemonstrationLabel, int]:
    rng = sample_rng(seed, f"{EnvName.NAV}/{complexity}", index)
    for attempt in range(NavDefaults.MAX_RESAMPLES):
        try:
            scene = sample_nav_scene(rng, complexity)
            return scene, scripted_mpc_demo(scene), attempt
        except (ValueError, DemonstrationFailureError) as exc:
            logger.debug("resampling nav scene %d: %s", index, exc)
    msg = (
        f"no valid nav scene after {NavDefaults.MAX_RESAMPLES} attempts "
        f"(sample {index})"
    )
    raise DemonstrationFailureError(msg)


def gen_nav_dataset(
    complexity: NavComplexity,
    n: int,
    seed: int,
    *,
    validation_fraction: float = ShapesDefaults.VALIDATION_FRACTION,
    workers: int = 1,
) -> NavDataset:
    """``n`` scenes with demonstrations; stuck or invalid scenes are resampled."""
    if n <= 0:
        msg = f"dataset size must be positive, got {n}"
        raise ConfigurationError(msg)
    complexity = NavComplexity(complexity)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda i: _nav_sample(seed, i, complexity), range(n)))
    resampled = sum(r[2] for r in rows)
    if resampled:
        logger.warning("resampled %d nav scenes that were invalid or stuck", resampled)
    return NavDataset(
        images=np.stack([render_nav(r[0]) for r in rows]),
        labels=np.array([r[1].future_positions for r in rows], dtype=np.float64),
        scenes=[r[0] for r in rows],
        splits=split_tags(n, validation_fraction),
        resampled=resampled,
    )
