"""Closed sensorimotor loop: camera and gyro events in, wheel commands out."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .braitenberg import BraitenbergNetwork, BraitenbergParams, MotorGains, build_braitenberg, decode_motors
from .dvs import DvsModel, GyroModel, simulate_dvs, simulate_gyro
from .world import Arena, Circle, RobotLimits, RobotState, Target, robot_step


@dataclass(frozen=True)
class NavigationParams:
    period: float = 0.01
    window: float = 0.1
    reach_radius: float = 0.1
    duration: float = 40.0
    network: BraitenbergParams = BraitenbergParams()
    dvs: DvsModel = DvsModel()
    gyro: GyroModel = GyroModel()
    gains: MotorGains = MotorGains()
    limits: RobotLimits = RobotLimits()


@dataclass
class TrialResult:
    seed: int
    arena: str
    trajectory: np.ndarray
    """Rows ``t, x, y, theta, v, omega, collision_flag``."""
    collisions: int
    reached: bool
    time_to_target: float
    sop_count: int
    energy: float
    raster: tuple[np.ndarray, np.ndarray] = field(repr=False, default=(np.zeros(0, np.int64), np.zeros(0, np.int64)))

    @property
    def outcome(self) -> str:
        if self.reached:
            return "reached"
        return "collision" if self.collisions else "timeout"


TRAJECTORY_HEADER = "t,x,y,theta,v,omega,collision_flag"


def run_navigation_trial(
    arena: Arena,
    seed: int,
    duration: float | None = None,
    params: NavigationParams = NavigationParams(),
    network: BraitenbergNetwork | None = None,
    keep_raster: bool = False,
) -> TrialResult:
    """Drive the robot until it reaches the target, collides, or time runs out."""
    duration = params.duration if duration is None else float(duration)
    net = network if network is not None else build_braitenberg(params.network)
    chip = net.make_chip(seed)
    rng = np.random.default_rng([seed, 1])
    r = RobotState(*arena.start)
    period_us = int(round(params.period * 1e6))
    n_periods = int(math.floor(duration / params.period + 1e-9))
    n_hist = max(1, int(round(params.window / params.period)))
    hist: deque[np.ndarray] = deque(maxlen=n_hist)
    rows = []
    reached, t_reach = False, math.nan
    height = params.dvs.height
    for k in range(n_periods):
        t0_us = k * period_us
        t0 = t0_us * 1e-6
        ev = simulate_dvs(arena, r, params.period, rng, params.dvs, t0)
        g = simulate_gyro(r, params.period, rng, params.gyro, t0)
        addr = net.inputs.pixel_addresses(ev.x, ev.y, height)
        times = np.concatenate([ev.t, g])
        addrs = np.concatenate([addr, np.full(g.size, net.inputs.gyro, np.int64)])
        times = np.clip(times, t0_us, t0_us + period_us - 1)
        order = np.argsort(times, kind="stable")
        st, sn = chip.advance_arrays(t0_us + period_us, times[order], addrs[order])
        hist.append(sn)
        v_cmd, w_cmd = decode_motors(np.concatenate(hist), n_hist * params.period, net.layout, params.gains)
        r = robot_step(r, v_cmd, w_cmd, params.period, arena, params.limits)
        t1 = (k + 1) * params.period
        rows.append((t1, r.x, r.y, r.theta, r.v, r.omega, int(r.collided)))
        if r.collided:
            break
        if math.hypot(r.x - arena.target.x, r.y - arena.target.y) <= params.reach_radius:
            reached, t_reach = True, t1
            break
    traj = np.array(rows, dtype=float).reshape(-1, 7)
    rep = chip.energy_report()
    raster = chip.raster_arrays() if keep_raster else (np.zeros(0, np.int64), np.zeros(0, np.int64))
    return TrialResult(seed, arena.name, traj, int(r.collided), reached, t_reach,
                       rep["sop_count"], rep["total_energy"], raster)


def write_trajectory(path, result: TrialResult) -> None:
    with open(path, "w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for row in result.trajectory:
            fh.write(f"{row[0]:.3f},{row[1]:.6f},{row[2]:.6f},{row[3]:.6f},{row[4]:.6f},{row[5]:.6f},{int(row[6])}\n")


def default_arena_suite() -> dict[str, Arena]:
    """Empty arena, one obstacle on the direct path, and three scattered obstacles."""
    target = Target(2.25, 1.25, 50.0)
    start = (0.25, 1.25, 0.0)
    return {
        "empty": Arena(target=target, start=start, name="empty"),
        "one_obstacle": Arena(obstacles=(Circle(1.25, 1.25, 0.15),), target=target, start=start,
                              name="one_obstacle"),
        "three_obstacles": Arena(
            obstacles=(Circle(0.9, 1.05, 0.12), Circle(1.4, 1.45, 0.12), Circle(1.85, 1.0, 0.12)),
            target=target, start=start, name="three_obstacles"),
    }
