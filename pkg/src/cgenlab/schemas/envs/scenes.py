"""Symbolic scene descriptions of the procedural environments."""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cgenlab.config.constants import (
    NavComplexity,
    NavDefaults,
    ObstacleKind,
    ShapesDefaults,
    StonesDefaults,
)

# ----------------------------------------------------------------------------
# Two-class rings
# ----------------------------------------------------------------------------


class ShapesParams(BaseModel):
    """Render parameters of one ring image."""

    model_config = ConfigDict(frozen=True)

    class_id: int = Field(ge=0, le=1)
    center_x: float
    center_y: float
    radius: float = Field(
        ge=ShapesDefaults.MIN_RING_RADIUS / ShapesDefaults.INNER_RADIUS_RATIO,
    )
    stroke: float = Field(gt=0)
    noise_sigma: float = Field(default=ShapesDefaults.NOISE_SIGMA, ge=0)

    @property
    def inner_radius(self) -> float:
        """Radius of the second ring of class 1."""
        return ShapesDefaults.INNER_RADIUS_RATIO * self.radius


# ----------------------------------------------------------------------------
# Stepping stones
# ----------------------------------------------------------------------------


class StonesScene(BaseModel):
    """Objects on a unit lane, a target, and the reach threshold δ."""

    model_config = ConfigDict(frozen=True)

    objects: tuple[float, ...] = ()
    target: float = Field(ge=0.0, le=1.0)
    delta: float = Field(default=StonesDefaults.DELTA, gt=0.0)
    start: float = 0.0

    @field_validator("objects")
    def objects_strictly_increasing(
        cls,  # noqa: N805
        v: tuple[float, ...],
    ) -> tuple[float, ...]:
        """Positions lie in [0, 1] and are strictly increasing."""
        if any(not 0.0 <= p <= 1.0 for p in v):
            msg = "object positions must lie in [0, 1]"
            raise ValueError(msg)
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            msg = "object positions must be strictly increasing"
            raise ValueError(msg)
        return v

    @model_validator(mode="after")  # type: ignore[arg-type]
    def target_after_objects(cls, model: "StonesScene") -> "StonesScene":  # noqa: N805
        """Target is beyond the last object or coincides with an object."""
        if model.objects and model.target <= model.objects[-1]:
            if model.target not in model.objects:
                msg = (
                    f"target {model.target} must be beyond the last object "
                    f"{model.objects[-1]} or equal to an object position"
                )
                raise ValueError(msg)
        return model


# ----------------------------------------------------------------------------
# Navigation micro-world
# ----------------------------------------------------------------------------


class Pose(BaseModel):
    """Planar pose; ``heading`` is the world angle of the forward axis (rad)."""

    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    heading: float


class Obstacle(BaseModel):
    """A cone (disc) or a barrier (segment of given length and orientation)."""

    model_config = ConfigDict(frozen=True)

    kind: ObstacleKind
    x: float = Field(ge=0.0, le=NavDefaults.PLATFORM_SIZE)
    y: float = Field(ge=0.0, le=NavDefaults.PLATFORM_SIZE)
    orientation: float = 0.0
    size: float = Field(default=NavDefaults.CONE_RADIUS, gt=0.0)

    def endpoints(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Segment endpoints of a barrier (a degenerate segment for cones)."""
        if self.kind == ObstacleKind.CONE:
            return (self.x, self.y), (self.x, self.y)
        half = self.size / 2
        dx = half * math.cos(self.orientation)
        dy = half * math.sin(self.orientation)
        return (self.x - dx, self.y - dy), (self.x + dx, self.y + dy)

    def clearance(self, px: float, py: float) -> float:
        """Distance from a point to the obstacle surface (negative inside)."""
        (ax, ay), (bx, by) = self.endpoints()
        vx, vy = bx - ax, by - ay
        length2 = vx * vx + vy * vy
        t = 0.0
        if length2 > 0:
            t = min(1.0, max(0.0, ((px - ax) * vx + (py - ay) * vy) / length2))
        cx, cy = ax + t * vx, ay + t * vy
        dist = math.hypot(px - cx, py - cy)
        if self.kind == ObstacleKind.CONE:
            return dist - self.size
        return dist - NavDefaults.BARRIER_THICKNESS / 2


def circuit_waypoints() -> tuple[tuple[float, float], ...]:
    """Platform corners, inset, in clockwise visiting order."""
    lo = NavDefaults.CORNER_INSET
    hi = NavDefaults.PLATFORM_SIZE - NavDefaults.CORNER_INSET
    return ((lo, lo), (lo, hi), (hi, hi), (hi, lo))


class NavScene(BaseModel):
    """Robot pose, circuit waypoints, obstacles and complexity tag."""

    model_config = ConfigDict(frozen=True)

    pose: Pose
    waypoints: tuple[tuple[float, float], ...] = Field(
        default_factory=circuit_waypoints,
    )
    waypoint_index: int = Field(default=0, ge=0)
    obstacles: tuple[Obstacle, ...] = ()
    complexity: NavComplexity = NavComplexity.FULL

    @model_validator(mode="after")  # type: ignore[arg-type]
    def robot_outside_obstacles(cls, model: "NavScene") -> "NavScene":  # noqa: N805
        """Pose lies on the platform, clear of every obstacle."""
        size = NavDefaults.PLATFORM_SIZE
        if not (0.0 <= model.pose.x <= size and 0.0 <= model.pose.y <= size):
            msg = f"robot pose ({model.pose.x}, {model.pose.y}) is off the platform"
            raise ValueError(msg)
        if model.waypoint_index >= len(model.waypoints):
            msg = "waypoint_index is out of range"
            raise ValueError(msg)
        for obstacle in model.obstacles:
            gap = obstacle.clearance(model.pose.x, model.pose.y)
            if gap < NavDefaults.ROBOT_RADIUS:
                msg = (
                    f"robot starts inside a {obstacle.kind} "
                    f"at ({obstacle.x}, {obstacle.y})"
                )
                raise ValueError(msg)
        if model.complexity == NavComplexity.EMPTY and model.obstacles:
            msg = "an empty scene cannot hold obstacles"
            raise ValueError(msg)
        if model.complexity == NavComplexity.CONES_ONLY and any(
            o.kind == ObstacleKind.BARRIER for o in model.obstacles
        ):
            msg = "a cones_only scene cannot hold barriers"
            raise ValueError(msg)
        return model

    @property
    def has_barrier(self) -> bool:
        """Whether any barrier is present."""
        return any(o.kind == ObstacleKind.BARRIER for o in self.obstacles)


class DemonstrationLabel(BaseModel):
    """Five future (x, y) positions in the robot frame, flattened to 10 reals."""

    model_config = ConfigDict(frozen=True)

    future_positions: tuple[float, ...]
    clamped: bool = False

    @field_validator("future_positions")
    def ten_components(
        cls,  # noqa: N805
        v: tuple[float, ...],
    ) -> tuple[float, ...]:
        """Exactly five pairs."""
        expected = 2 * NavDefaults.HORIZON_STEPS
        if len(v) != expected:
            msg = f"a demonstration label has {expected} components, got {len(v)}"
            raise ValueError(msg)
        return v
