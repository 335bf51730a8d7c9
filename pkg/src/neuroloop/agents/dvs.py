"""Geometric Poisson model of a forward-facing event camera and a gyroscope.

The camera is a pinhole looking along the robot heading. Image column 0 is
the left edge of the field of view, row 0 the top. Floor-standing obstacles
sit below the camera and project into the lower image half; the target LED
is mounted above camera height and projects into the upper half.

Obstacle events come from the two silhouette edges of each visible circle.
Each edge column carries ``k_motion * |d(bearing)/dt|`` events per second
per pixel row it covers, and the events of one sensor period are spread
over the columns the edge swept during that period. The LED emits a burst
of ``k_led`` events (Poisson mean) per block pixel at every on/off
transition of its blink cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .world import Arena, RobotState, wrap_angle


@dataclass(frozen=True)
class DvsModel:
    width: int = 128
    height: int = 128
    fov: float = math.radians(60.0)
    k_motion: float = 1000.0
    k_led: float = 2.0
    led_block: int = 2
    camera_height: float = 0.10
    obstacle_height: float = 0.08
    led_height: float = 0.25
    max_range: float = 5.0
    wall_stripe_spacing: float | None = None
    wall_contrast: float = 1.0

    @property
    def focal(self) -> float:
        """Focal length in pixels."""
        return (self.width / 2) / math.tan(self.fov / 2)

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2

    def column(self, bearing: float) -> float:
        """Continuous image column of a relative bearing (positive = left)."""
        return self.cx - self.focal * math.tan(bearing)

    def visible(self, bearing: float) -> bool:
        return abs(bearing) < self.fov / 2


@dataclass(frozen=True)
class DvsEvents:
    """Pixel events sorted by time; ``t`` in microseconds."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return int(self.t.size)

    @classmethod
    def empty(cls) -> "DvsEvents":
        z = np.zeros(0, np.int64)
        return cls(z, z.copy(), z.copy())


def _bearing_rate(bearing: float, dist: float, v: float, omega: float) -> float:
    """Time derivative of the relative bearing of a static world point."""
    return v * math.sin(bearing) / dist - omega


def _edge_tracks(arena: Arena, r: RobotState, model: DvsModel):
    """Visible obstacle edges as (bearing, bearing rate, distance, row extent), near to far."""
    ca, sa = math.cos(r.theta), math.sin(r.theta)
    items = []
    for ob in arena.obstacles:
        dx, dy = ob.x - r.x, ob.y - r.y
        d = math.hypot(dx, dy)
        if d <= ob.r or d > model.max_range:
            continue
        phi = wrap_angle(math.atan2(dy, dx) - r.theta)
        if abs(phi) >= math.pi / 2:
            continue
        half = math.asin(ob.r / d)
        ddot = -(r.v * (dx * ca + dy * sa)) / d
        half_rate = -ob.r * ddot / (d * d * math.sqrt(1 - (ob.r / d) ** 2))
        phi_rate = _bearing_rate(phi, d, r.v, r.omega)
        depth = d * math.cos(phi)
        top = model.cy + model.focal * (model.camera_height - model.obstacle_height) / depth
        bottom = model.cy + model.focal * model.camera_height / depth
        y0 = int(max(math.ceil(model.cy), math.ceil(top)))
        y1 = int(min(model.height - 1, math.floor(bottom)))
        items.append((d, phi, half, phi_rate, half_rate, y0, y1))
    items.sort(key=lambda it: it[0])
    edges = []
    covered: list[tuple[float, float, float]] = []
    for d, phi, half, phi_rate, half_rate, y0, y1 in items:
        for sign in (1.0, -1.0):
            b = phi + sign * half
            if not model.visible(b) or y1 < y0:
                continue
            if any(lo < b < hi for lo, hi, _ in covered):
                continue
            edges.append((b, phi_rate + sign * half_rate, y0, y1, 1.0))
        covered.append((phi - half, phi + half, d))
    if model.wall_stripe_spacing:
        for px, py in _wall_stripes(arena, model.wall_stripe_spacing):
            dx, dy = px - r.x, py - r.y
            d = math.hypot(dx, dy)
            if d < 1e-6 or d > model.max_range:
                continue
            phi = wrap_angle(math.atan2(dy, dx) - r.theta)
            if not model.visible(phi):
                continue
            if any(lo < phi < hi and dd < d for lo, hi, dd in covered):
                continue
            depth = d * math.cos(phi)
            y0 = int(math.ceil(model.cy))
            y1 = int(min(model.height - 1, math.floor(model.cy + model.focal * model.camera_height / depth)))
            if y1 < y0:
                continue
            edges.append((phi, _bearing_rate(phi, d, r.v, r.omega), y0, y1, model.wall_contrast))
    return edges


def _wall_stripes(arena: Arena, spacing: float) -> list[tuple[float, float]]:
    """Evenly spaced vertical texture stripes along the four walls."""
    pts = []
    nx = max(1, int(round(arena.width / spacing)))
    ny = max(1, int(round(arena.height / spacing)))
    for k in range(nx + 1):
        x = arena.width * k / nx
        pts.append((x, 0.0))
        pts.append((x, arena.height))
    for k in range(1, ny):
        y = arena.height * k / ny
        pts.append((0.0, y))
        pts.append((arena.width, y))
    return pts


def led_transitions(rate: float, t0: float, t1: float) -> np.ndarray:
    """On/off switching instants of a square-wave blink at ``rate`` Hz in ``[t0, t1)``."""
    if rate <= 0 or t1 <= t0:
        return np.zeros(0)
    period = 0.5 / rate
    k0 = math.ceil(t0 / period - 1e-9)
    k1 = math.ceil(t1 / period - 1e-9)
    return np.arange(k0, k1) * period


def simulate_dvs(
    arena: Arena,
    r: RobotState,
    dt: float,
    seed: int | np.random.Generator | None = None,
    model: DvsModel = DvsModel(),
    t0: float = 0.0,
) -> DvsEvents:
    """Events generated during ``[t0, t0 + dt)`` for a robot moving with ``r.v``, ``r.omega``."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ts, xs, ys = [], [], []
    f = model.focal
    for b, rate, y0, y1, contrast in _edge_tracks(arena, r, model):
        rows = y1 - y0 + 1
        n = rng.poisson(contrast * model.k_motion * abs(rate) * rows * dt)
        if n == 0:
            continue
        c0 = model.column(b)
        b_end = b + rate * dt
        c1 = model.cx - f * math.tan(max(-1.5, min(1.5, b_end)))
        frac = rng.uniform(0.0, 1.0, n)
        cols = np.rint(c0 + (c1 - c0) * frac).astype(np.int64)
        keep = (cols >= 0) & (cols < model.width)
        ts.append(t0 + frac[keep] * dt)
        xs.append(cols[keep])
        ys.append(rng.integers(y0, y1 + 1, int(keep.sum())))
    tgt = arena.target
    trans = led_transitions(tgt.led_rate, t0, t0 + dt)
    if trans.size:
        dx, dy = tgt.x - r.x, tgt.y - r.y
        d = math.hypot(dx, dy)
        phi = wrap_angle(math.atan2(dy, dx) - r.theta)
        if d > 1e-9 and model.visible(phi) and d <= model.max_range:
            depth = d * math.cos(phi)
            row = model.cy - f * (model.led_height - model.camera_height) / depth
            col = model.column(phi)
            k = model.led_block
            cx0 = int(round(col - (k - 1) / 2))
            ry0 = int(round(row - (k - 1) / 2))
            bx, by = np.meshgrid(np.arange(cx0, cx0 + k), np.arange(ry0, ry0 + k))
            bx, by = bx.ravel(), by.ravel()
            ok = (bx >= 0) & (bx < model.width) & (by >= 0) & (by < model.cy)
            bx, by = bx[ok], by[ok]
            for tt in trans:
                counts = rng.poisson(model.k_led, bx.size)
                tot = int(counts.sum())
                if tot:
                    ts.append(np.full(tot, tt))
                    xs.append(np.repeat(bx, counts))
                    ys.append(np.repeat(by, counts))
    if not ts:
        return DvsEvents.empty()
    t = np.concatenate(ts)
    t_us = np.floor(t * 1e6 + 1e-6).astype(np.int64)
    x = np.concatenate(xs).astype(np.int64)
    y = np.concatenate(ys).astype(np.int64)
    order = np.lexsort((x, y, t_us))
    return DvsEvents(t_us[order], x[order], y[order])


@dataclass(frozen=True)
class GyroModel:
    """Events at ``k_gyro * |omega|`` per second on a single address."""

    k_gyro: float = 4000.0


def simulate_gyro(r: RobotState, dt: float, seed: int | np.random.Generator | None = None,
                  model: GyroModel = GyroModel(), t0: float = 0.0) -> np.ndarray:
    """Timestamps (us) of gyroscope events in ``[t0, t0 + dt)``."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = rng.poisson(model.k_gyro * abs(r.omega) * dt)
    return np.sort(np.floor((t0 + rng.uniform(0, dt, n)) * 1e6 + 1e-6).astype(np.int64))
