"""Obstacle avoidance and target acquisition compiled onto one chip.

Populations (default sizes in parentheses):

* ``target1`` (64) with ``target1_inh`` (4): soft WTA, one neuron per pair
  of upper-half camera columns.
* ``target2`` (64) with ``target2_inh`` (4): strongly selective WTA fed
  topographically from ``target1``.
* ``obstacle`` (64): plain topographic map of the lower-half columns.
* ``motor_l``, ``motor_r`` (16 each): wheel drives; the robot turns toward
  the side whose wheel runs slower. The two pools inhibit each other so
  that a symmetric obstacle still produces a committed turn.
* ``speed`` (16): tonically driven by a bias current, inhibited by obstacles.
* ``gyro`` (8): driven by gyroscope events, inhibits both visual layers.

A target in the left image half excites ``motor_r`` (left turn, toward it);
an obstacle in the left half excites ``motor_l`` (right turn, away).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chip import Chip, ChipConfig, ConnectivityMatrix, build_chip
from ..chip.connectivity import ConnectivityFragment
from ..errors import LayoutError
from ..fields.dnf import KernelParams
from ..fields.wta import WtaLayout, WtaSpec, compile_wta
from .layout import NetworkLayout

POPULATIONS = ("target1", "target1_inh", "target2", "target2_inh", "obstacle",
               "motor_l", "motor_r", "speed", "gyro")


@dataclass(frozen=True)
class BraitenbergParams:
    n_columns: int = 64
    n_target_inh: int = 4
    n_motor: int = 16
    n_speed: int = 16
    n_gyro: int = 8
    camera_width: int = 128
    target1: WtaSpec = WtaSpec(64, 4, KernelParams(2.0, 0.0, 1.0, 64.0), exc_to_inh=1, inh_to_exc=-1)
    target2: WtaSpec = WtaSpec(64, 4, KernelParams(3.0, 0.0, 1.5, 64.0), exc_to_inh=1, inh_to_exc=-3)
    dvs_to_target: int = 3
    dvs_to_obstacle: int = 1
    target1_to_target2: int = 3
    target_to_motor: int = 1
    obstacle_bands: tuple[tuple[int, int], ...] = ((6, 3), (12, 2), (18, 1))
    target_deadzone: int = 0
    obstacle_to_speed: int = -1
    motor_cross: int = -2
    motor_self: int = 0
    gyro_to_gyro: int = 3
    gyro_to_target: int = -1
    gyro_to_obstacle: int = -3
    speed_bias: float = 100e-12
    chip: ChipConfig = field(default_factory=ChipConfig)

    def layout(self) -> NetworkLayout:
        sizes = {
            "target1": self.n_columns, "target1_inh": self.n_target_inh,
            "target2": self.n_columns, "target2_inh": self.n_target_inh,
            "obstacle": self.n_columns, "motor_l": self.n_motor, "motor_r": self.n_motor,
            "speed": self.n_speed, "gyro": self.n_gyro,
        }
        return NetworkLayout.pack(sizes, self.chip.n_neurons)


@dataclass(frozen=True)
class InputMap:
    """External input addresses used by the navigation network."""

    n_columns: int
    camera_width: int

    @property
    def target_base(self) -> int:
        return 0

    @property
    def obstacle_base(self) -> int:
        return self.n_columns

    @property
    def gyro(self) -> int:
        return 2 * self.n_columns

    def pixel_addresses(self, x: np.ndarray, y: np.ndarray, height: int) -> np.ndarray:
        """Upper-half pixels map to target addresses, lower-half ones to obstacle addresses."""
        col = (np.asarray(x, dtype=np.int64) * self.n_columns) // self.camera_width
        lower = np.asarray(y) >= height // 2
        return np.where(lower, self.obstacle_base + col, self.target_base + col)


@dataclass
class BraitenbergNetwork:
    cfg: ChipConfig
    layout: NetworkLayout
    conn: ConnectivityMatrix
    bias: np.ndarray
    inputs: InputMap
    params: BraitenbergParams

    def make_chip(self, seed: int) -> Chip:
        chip = build_chip(self.cfg.replace(seed=seed), self.conn.copy())
        chip.bias[:] = self.bias
        return chip


def _sides(rng: range, inner: int, outer: int) -> tuple[list[int], list[int]]:
    """Left and right neurons whose distance from the map center lies in ``[inner, outer)``.

    Distances count whole neurons outward from the two central ones, so
    ``inner=0`` and ``outer=len(rng)//2`` give the plain left and right halves.
    """
    half = len(rng) // 2
    left = [rng.start + half - 1 - k for k in range(inner, min(outer, half))]
    right = [rng.start + half + k for k in range(inner, min(outer, half))]
    return sorted(left), right


def build_braitenberg(params: BraitenbergParams = BraitenbergParams()) -> BraitenbergNetwork:
    """Compile the navigation network; raises ``LayoutError`` if it does not fit."""
    for name in ("target1", "target2"):
        spec = getattr(params, name)
        if spec.n_exc != params.n_columns or spec.n_inh != params.n_target_inh:
            raise LayoutError(f"{name} WTA sizes must be ({params.n_columns}, {params.n_target_inh})")
    lay = params.layout()
    cfg = params.chip
    inputs = InputMap(params.n_columns, params.camera_width)
    if inputs.gyro >= cfg.n_inputs:
        raise LayoutError(f"needs {inputs.gyro + 1} input addresses; chip has {cfg.n_inputs}")
    frag = ConnectivityFragment()
    t1, t2, ob = lay["target1"], lay["target2"], lay["obstacle"]
    frag.extend(compile_wta(params.target1, WtaLayout(t1.start, lay["target1_inh"].start,
                                                     len(t1), len(lay["target1_inh"])), cfg.n_neurons))
    frag.extend(compile_wta(params.target2, WtaLayout(t2.start, lay["target2_inh"].start,
                                                     len(t2), len(lay["target2_inh"])), cfg.n_neurons))
    for c in range(params.n_columns):
        frag.feed(inputs.target_base + c, [t1[c]], params.dvs_to_target)
        frag.feed(inputs.obstacle_base + c, [ob[c]], params.dvs_to_obstacle)
        frag.connect([t1[c]], [t2[c]], params.target1_to_target2)
    t2_left, t2_right = _sides(t2, params.target_deadzone, len(t2))
    frag.connect(t2_left, lay["motor_r"], params.target_to_motor)
    frag.connect(t2_right, lay["motor_l"], params.target_to_motor)
    inner = 0
    for outer, level in params.obstacle_bands:
        ob_left, ob_right = _sides(ob, inner, outer)
        frag.connect(ob_left, lay["motor_l"], level)
        frag.connect(ob_right, lay["motor_r"], level)
        inner = outer
    frag.connect(ob, lay["speed"], -abs(params.obstacle_to_speed))
    frag.connect(lay["motor_l"], lay["motor_r"], -abs(params.motor_cross))
    frag.connect(lay["motor_r"], lay["motor_l"], -abs(params.motor_cross))
    frag.connect(lay["motor_l"], lay["motor_l"], params.motor_self)
    frag.connect(lay["motor_r"], lay["motor_r"], params.motor_self)
    frag.feed(inputs.gyro, lay["gyro"], params.gyro_to_gyro)
    frag.connect(lay["gyro"], t1, -abs(params.gyro_to_target))
    frag.connect(lay["gyro"], ob, -abs(params.gyro_to_obstacle))
    conn = ConnectivityMatrix.for_config(cfg)
    conn.merge(frag)
    bias = np.zeros(cfg.n_neurons)
    bias[lay["speed"].start:lay["speed"].stop] = params.speed_bias
    return BraitenbergNetwork(cfg, lay, conn, bias, inputs, params)


@dataclass(frozen=True)
class MotorGains:
    g_v: float = 0.0008
    g_omega: float = 0.01


def population_rate(neurons: np.ndarray, pop: range, window: float) -> float:
    """Mean per-neuron firing rate (Hz) of ``pop`` over ``window`` seconds."""
    n = np.asarray(neurons)
    hits = np.count_nonzero((n >= pop.start) & (n < pop.stop))
    return hits / (window * len(pop))


def decode_motors(neurons: np.ndarray, window: float, layout: NetworkLayout,
                  gains: MotorGains = MotorGains()) -> tuple[float, float]:
    """Translate the spikes of one trailing window into ``(v_cmd, omega_cmd)``.

    ``neurons`` holds the indices of all output spikes in the window.
    """
    if not window > 0:
        raise ValueError(f"window must be > 0, got {window}")
    r_l = population_rate(neurons, layout["motor_l"], window)
    r_r = population_rate(neurons, layout["motor_r"], window)
    r_s = population_rate(neurons, layout["speed"], window)
    return gains.g_v * r_s, gains.g_omega * (r_r - r_l)
