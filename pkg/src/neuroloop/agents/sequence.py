"""Serial-order learning and replay on one chip.

Each serial position owns an *ordinal* group and a *memory* group, both
self-sustaining. Ordinal groups compete through mutual inhibition so that
only one is active at a time. Ordinal ``i`` switches on memory ``i``;
memory ``i`` then pre-activates ordinal ``i+1`` and keeps ordinal ``i``
from re-igniting. A condition-of-satisfaction (CoS) group, fired by the
harness when the current item is done, silences all ordinal groups and the
content field; when it falls silent the next ordinal group takes over.

Ordinal groups project to a content WTA through learning synapses. While
ordinal ``k`` and a content bump at location ``items[k]`` are active
together, those synapses potentiate; during replay the learned weights
alone recreate the bump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..chip import Chip, ChipConfig, ConnectivityMatrix, build_chip
from ..errors import LayoutError, ParameterError
from ..fields.dnf import KernelParams
from ..fields.wta import WtaLayout, WtaSpec, compile_wta
from .layout import NetworkLayout


@dataclass(frozen=True)
class SequenceParams:
    n_items: int = 5
    group_size: int = 16
    n_locations: int = 64
    n_content_inh: int = 16
    n_cos: int = 16
    content: WtaSpec = WtaSpec(64, 16, KernelParams(3.0, 0.0, 1.5, 64.0), exc_to_inh=1, inh_to_exc=-1)
    ordinal_self: int = 3
    ordinal_cross: int = -2
    ordinal_to_memory: int = 2
    memory_self: int = 1
    memory_to_next: int = 1
    memory_next_sources: int = 8
    memory_to_own: int = -1
    cos_to_ordinal: int = -3
    cos_to_content: int = -3
    input_to_content: int = 3
    drive_to_ordinal: int = 3
    cos_input: int = 3
    reset_level: int = -3
    plastic_x0: float = 0.0
    chip: ChipConfig = field(default_factory=ChipConfig)

    def layout(self) -> NetworkLayout:
        sizes = {}
        for i in range(self.n_items):
            sizes[f"ordinal{i}"] = self.group_size
        for i in range(self.n_items):
            sizes[f"memory{i}"] = self.group_size
        sizes["content"] = self.n_locations
        sizes["content_inh"] = self.n_content_inh
        sizes["cos"] = self.n_cos
        return NetworkLayout.pack(sizes, self.chip.n_neurons)


@dataclass(frozen=True)
class SequenceInputs:
    """External addresses: content locations, one drive per ordinal group, CoS and reset."""

    n_locations: int
    n_items: int

    def location(self, k: int) -> int:
        return k

    def ordinal(self, i: int) -> int:
        return self.n_locations + i

    @property
    def cos(self) -> int:
        return self.n_locations + self.n_items

    @property
    def reset(self) -> int:
        return self.n_locations + self.n_items + 1


@dataclass
class SequenceNetwork:
    cfg: ChipConfig
    layout: NetworkLayout
    conn: ConnectivityMatrix
    inputs: SequenceInputs
    params: SequenceParams

    def make_chip(self, seed: int) -> Chip:
        return build_chip(self.cfg.replace(seed=seed), self.conn.copy())

    def ordinal(self, i: int) -> range:
        return self.layout[f"ordinal{i}"]

    def memory(self, i: int) -> range:
        return self.layout[f"memory{i}"]

    @property
    def ordinal_neurons(self) -> range:
        return range(self.ordinal(0).start, self.ordinal(self.params.n_items - 1).stop)

    def plastic_matrix(self, chip: Chip) -> np.ndarray:
        """Learning-synapse state as an ``(n_items * group_size) x n_locations`` array."""
        x = chip.plastic_state()
        c = self.layout["content"]
        o = self.ordinal_neurons
        return x[c.start:c.stop, o.start:o.stop].T.copy()


def build_sequence_network(params: SequenceParams = SequenceParams()) -> SequenceNetwork:
    """Compile the serial-order network; raises ``LayoutError`` if it does not fit."""
    if params.content.n_exc != params.n_locations or params.content.n_inh != params.n_content_inh:
        raise LayoutError("content WTA sizes differ from n_locations / n_content_inh")
    lay = params.layout()
    cfg = params.chip
    inputs = SequenceInputs(params.n_locations, params.n_items)
    if inputs.reset >= cfg.n_inputs:
        raise LayoutError(f"needs {inputs.reset + 1} input addresses; chip has {cfg.n_inputs}")
    content = lay["content"]
    frag = compile_wta(params.content, WtaLayout(content.start, lay["content_inh"].start,
                                                 len(content), len(lay["content_inh"])), cfg.n_neurons)
    ords = [lay[f"ordinal{i}"] for i in range(params.n_items)]
    mems = [lay[f"memory{i}"] for i in range(params.n_items)]
    cos = lay["cos"]
    for i, (o, m) in enumerate(zip(ords, mems)):
        frag.connect(o, o, params.ordinal_self)
        for j, other in enumerate(ords):
            if j != i:
                frag.connect(o, other, -abs(params.ordinal_cross))
        frag.connect(o, m, params.ordinal_to_memory)
        frag.connect(m, m, params.memory_self)
        frag.connect(m, o, -abs(params.memory_to_own))
        if i + 1 < params.n_items:
            frag.connect(m[:params.memory_next_sources], ords[i + 1], params.memory_to_next)
        frag.connect(cos, o, -abs(params.cos_to_ordinal))
        for pre in o:
            for post in content:
                frag.plastic.append((pre, post, params.plastic_x0))
        frag.feed(inputs.ordinal(i), o, params.drive_to_ordinal)
    frag.connect(cos, content, -abs(params.cos_to_content))
    for k in range(params.n_locations):
        frag.feed(inputs.location(k), [content[k]], params.input_to_content)
    frag.feed(inputs.cos, cos, params.cos_input)
    reset_targets = [n for g in ords + mems for n in g]
    frag.feed(inputs.reset, reset_targets, params.reset_level)
    conn = ConnectivityMatrix.for_config(cfg)
    conn.merge(frag)
    return SequenceNetwork(cfg, lay, conn, inputs, params)


@dataclass(frozen=True)
class ProtocolParams:
    t_item: float = 0.5
    t_hold: float = 0.3
    gap: float = 0.0
    settle: float = 0.1
    input_rate: float = 300.0
    input_width: float = 1.5
    drive_rate: float = 300.0
    drive_time: float = 0.05
    pulse_rate: float = 5000.0
    pulse_time: float = 0.05
    chunk: float = 0.01
    bump_window: float = 0.05
    bump_min_rate: float = 20.0
    bump_tolerance: int = 2
    replay_timeout: float = 1.0


@dataclass
class SequenceResult:
    items: list[int]
    replay: list[int]
    x_before: np.ndarray
    x_after: np.ndarray
    raster: tuple[np.ndarray, np.ndarray]
    phase_times: dict[str, float]
    sop_count: int
    energy: float

    def matches(self, tolerance: int = 2) -> bool:
        return len(self.replay) == len(self.items) and all(
            abs(r - i) <= tolerance for r, i in zip(self.replay, self.items))


def learning_margin(x: np.ndarray, items: list[int], group_size: int, radius: int = 2) -> float:
    """Smallest (on-target mean - off-target mean) of ``X`` over the learned groups."""
    if not items:
        return math.nan
    n_loc = x.shape[1]
    margins = []
    for k, loc in enumerate(items):
        rows = x[k * group_size:(k + 1) * group_size]
        on = np.zeros(n_loc, dtype=bool)
        on[max(0, loc - radius):min(n_loc, loc + radius + 1)] = True
        margins.append(float(rows[:, on].mean() - rows[:, ~on].mean()))
    return min(margins)


def sample_items(seed: int, n: int = 3, n_locations: int = 64, min_separation: int = 8,
                 edge: int = 4) -> list[int]:
    """Draw ``n`` distinct content locations at least ``min_separation`` apart.

    Locations closer than ``edge`` to either end of the field are avoided so
    that every bump has room on both sides.
    """
    rng = np.random.default_rng([seed, 3])
    lo, hi = edge, n_locations - edge
    if hi - lo < (n - 1) * min_separation + 1:
        raise ParameterError("field too small for the requested item spacing")
    while True:
        items = sorted(rng.choice(np.arange(lo, hi), n, replace=False).tolist())
        if all(b - a >= min_separation for a, b in zip(items, items[1:])):
            return [int(v) for v in rng.permutation(items)]


class _Driver:
    """Feeds Poisson input into the chip in fixed chunks and keeps the output."""

    def __init__(self, chip: Chip, rng: np.random.Generator, chunk_us: int):
        self.chip = chip
        self.rng = rng
        self.chunk_us = chunk_us
        self.out_t: list[np.ndarray] = []
        self.out_n: list[np.ndarray] = []

    def run(self, duration: float, rates: dict[int, float] | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Advance ``duration`` seconds with constant per-address Poisson rates (Hz)."""
        t0 = self.chip.time_us
        end = t0 + int(round(duration * 1e6))
        ts, ns = [], []
        while self.chip.time_us < end:
            a = self.chip.time_us
            b = min(end, a + self.chunk_us)
            times, addrs = self._events(a, b, rates or {})
            st, sn = self.chip.advance_arrays(b, times, addrs)
            ts.append(st)
            ns.append(sn)
        st = np.concatenate(ts) if ts else np.zeros(0, np.int64)
        sn = np.concatenate(ns) if ns else np.zeros(0, np.int64)
        self.out_t.append(st)
        self.out_n.append(sn)
        return st, sn

    def _events(self, a: int, b: int, rates: dict[int, float]):
        span = (b - a) * 1e-6
        if not rates or span <= 0:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        addrs = np.fromiter(rates.keys(), dtype=np.int64)
        lam = np.fromiter(rates.values(), dtype=float) * span
        counts = self.rng.poisson(lam)
        ad = np.repeat(addrs, counts)
        t = self.rng.integers(a, b, ad.size)
        order = np.lexsort((ad, t))
        return t[order], ad[order]


def _bump_position(neurons: np.ndarray, content: range, window: float, min_rate: float) -> float | None:
    """Location of the dominant content bump in a spike window, or ``None``."""
    sel = neurons[(neurons >= content.start) & (neurons < content.stop)] - content.start
    n = len(content)
    if sel.size == 0:
        return None
    counts = np.bincount(sel, minlength=n).astype(float)
    smooth = np.convolve(counts, np.ones(5), mode="same")
    peak = int(np.argmax(smooth))
    lo, hi = max(0, peak - 3), min(n, peak + 4)
    local = counts[lo:hi]
    if local.sum() / window < min_rate * 3:
        return None
    return float(np.dot(np.arange(lo, hi), local) / local.sum())


def run_sequence_experiment(
    items: list[int],
    seed: int = 0,
    params: SequenceParams = SequenceParams(),
    protocol: ProtocolParams = ProtocolParams(),
    network: SequenceNetwork | None = None,
) -> SequenceResult:
    """Learn the order of ``items`` (content locations), then replay it without content input."""
    items = [int(v) for v in items]
    if len(items) > params.n_items:
        raise ParameterError(f"at most {params.n_items} items, got {len(items)}")
    if len(set(items)) != len(items):
        raise ParameterError("item locations must be distinct")
    for v in items:
        if not 0 <= v < params.n_locations:
            raise ParameterError(f"item location {v} outside [0, {params.n_locations})")
    net = network if network is not None else build_sequence_network(params)
    chip = net.make_chip(seed)
    rng = np.random.default_rng([seed, 2])
    drv = _Driver(chip, rng, int(round(protocol.chunk * 1e6)))
    inp = net.inputs
    content = net.layout["content"]
    x_before = net.plastic_matrix(chip)
    phases: dict[str, float] = {}

    def pulse(address: int) -> None:
        drv.run(protocol.pulse_time, {address: protocol.pulse_rate})

    def bump_rates(loc: int) -> dict[int, float]:
        k = np.arange(params.n_locations)
        r = protocol.input_rate * np.exp(-((k - loc) ** 2) / (2 * protocol.input_width**2))
        return {inp.location(int(i)): float(v) for i, v in zip(k, r) if v > 1e-3 * protocol.input_rate}

    if items:
        # learning
        phases["learn_start"] = chip.time
        for k, loc in enumerate(items):
            drive = {inp.ordinal(k): protocol.drive_rate}
            drv.run(protocol.drive_time, drive)
            drv.run(protocol.t_item, bump_rates(loc))
            pulse(inp.cos)
            drv.run(protocol.settle + protocol.gap)
        pulse(inp.reset)
        pulse(inp.cos)
        drv.run(protocol.settle)
        phases["replay_start"] = chip.time
    x_learned = net.plastic_matrix(chip)

    replay: list[int] = []
    if items:
        drv.run(protocol.drive_time, {inp.ordinal(0): protocol.drive_rate})
        n_win = max(1, int(round(protocol.bump_window / protocol.chunk)))
        n_hold = max(1, int(round(protocol.t_hold / protocol.chunk)))
        n_wait = max(1, int(round(protocol.replay_timeout / protocol.chunk)))
        for _ in range(params.n_items):
            recent: list[np.ndarray] = []
            anchor, held, waited = None, 0, 0
            found = None
            while waited < n_wait + n_hold:
                _, sn = drv.run(protocol.chunk)
                recent.append(sn)
                recent = recent[-n_win:]
                pos = _bump_position(np.concatenate(recent), content, len(recent) * protocol.chunk,
                                     protocol.bump_min_rate)
                waited += 1
                if pos is None or (anchor is not None and abs(pos - anchor) > protocol.bump_tolerance):
                    anchor, held = pos, 0
                    continue
                if anchor is None:
                    anchor = pos
                held += 1
                if held >= n_hold:
                    found = int(round(anchor))
                    break
            if found is None:
                break
            replay.append(found)
            if protocol.gap:
                drv.run(protocol.gap)
            pulse(inp.cos)
        phases["replay_end"] = chip.time
    st = np.concatenate(drv.out_t) if drv.out_t else np.zeros(0, np.int64)
    sn = np.concatenate(drv.out_n) if drv.out_n else np.zeros(0, np.int64)
    rep = chip.energy_report()
    return SequenceResult(items, replay, x_before, x_learned, (st, sn), phases,
                          rep["sop_count"], rep["total_energy"])
