"""Arena geometry and differential-drive (unicycle) kinematics.

World frame: x to the right, y up, heading ``theta`` counter-clockwise
from the x axis. Positive turn rate ``omega`` is a left turn.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Any, Mapping

import yaml

from ..errors import ConfigError


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    r: float


@dataclass(frozen=True)
class Target:
    x: float
    y: float
    led_rate: float = 50.0


@dataclass(frozen=True)
class Arena:
    width: float = 2.5
    height: float = 2.5
    obstacles: tuple[Circle, ...] = ()
    target: Target = Target(2.25, 1.25)
    start: tuple[float, float, float] = (0.25, 1.25, 0.0)
    name: str = "arena"

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ConfigError("arena.width", "arena dimensions must be positive")
        for i, ob in enumerate(self.obstacles):
            if ob.r <= 0:
                raise ConfigError(f"arena.obstacles[{i}].r", "radius must be positive")
            if not (ob.r <= ob.x <= self.width - ob.r and ob.r <= ob.y <= self.height - ob.r):
                raise ConfigError(f"arena.obstacles[{i}]", "obstacle extends outside the arena")
            if math.hypot(ob.x - self.target.x, ob.y - self.target.y) <= ob.r:
                raise ConfigError(f"arena.obstacles[{i}]", "target lies inside an obstacle")
        if not (0 <= self.target.x <= self.width and 0 <= self.target.y <= self.height):
            raise ConfigError("arena.target", "target outside the arena")
        if not (0 <= self.start[0] <= self.width and 0 <= self.start[1] <= self.height):
            raise ConfigError("arena.start", "start pose outside the arena")

    def collides(self, x: float, y: float, radius: float) -> bool:
        if x < radius or y < radius or x > self.width - radius or y > self.height - radius:
            return True
        return any(math.hypot(x - ob.x, y - ob.y) < ob.r + radius for ob in self.obstacles)


def arena_from_dict(data: Mapping[str, Any], name: str = "arena") -> Arena:
    try:
        obstacles = tuple(Circle(float(o["x"]), float(o["y"]), float(o["r"])) for o in data.get("obstacles", ()))
        t = data.get("target", {})
        target = Target(float(t.get("x", 2.25)), float(t.get("y", 1.25)), float(t.get("led_rate", 50.0)))
        start = tuple(float(v) for v in data.get("start", (0.25, 1.25, 0.0)))
        if len(start) != 3:
            raise ConfigError(f"{name}.start", "expected [x, y, theta]")
        return Arena(
            width=float(data.get("width", 2.5)),
            height=float(data.get("height", 2.5)),
            obstacles=obstacles,
            target=target,
            start=start,
            name=str(data.get("name", name)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(name, f"malformed arena: {exc}") from None


def arena_to_dict(arena: Arena) -> dict:
    return {
        "name": arena.name,
        "width": arena.width,
        "height": arena.height,
        "start": list(arena.start),
        "target": {"x": arena.target.x, "y": arena.target.y, "led_rate": arena.target.led_rate},
        "obstacles": [{"x": o.x, "y": o.y, "r": o.r} for o in arena.obstacles],
    }


def read_arena(path: str | os.PathLike) -> Arena:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return arena_from_dict(data, name=os.path.splitext(os.path.basename(path))[0])


def write_arena(path: str | os.PathLike, arena: Arena) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(arena_to_dict(arena), fh, sort_keys=False)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2 * math.pi)
    if a <= 0:
        a += 2 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class RobotLimits:
    v_max: float = 0.3
    omega_max: float = 0.8
    radius: float = 0.05


@dataclass(frozen=True)
class RobotState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    omega: float = 0.0
    collided: bool = False


def robot_step(
    r: RobotState,
    v_cmd: float,
    omega_cmd: float,
    dt: float,
    arena: Arena | None = None,
    limits: RobotLimits = RobotLimits(),
) -> RobotState:
    """Unicycle update with clamped commands; a collision freezes the pose."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if r.collided:
        return replace(r, v=0.0, omega=0.0)
    v = max(-limits.v_max, min(limits.v_max, v_cmd))
    w = max(-limits.omega_max, min(limits.omega_max, omega_cmd))
    x = r.x + v * math.cos(r.theta) * dt
    y = r.y + v * math.sin(r.theta) * dt
    theta = wrap_angle(r.theta + w * dt)
    if arena is not None and arena.collides(x, y, limits.radius):
        return replace(r, v=0.0, omega=0.0, collided=True)
    return RobotState(x, y, theta, v, w, False)
