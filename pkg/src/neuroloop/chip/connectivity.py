"""Synapse array contents, routing tables and the connectivity file format.

Columns are indexed per neuron row: ``0 .. n_plastic-1`` are learning
(LTP) synapses, ``n_plastic .. n_plastic+n_static-1`` are fixed-weight
(STP) synapses. Static weights are signed integer levels in
``[-MAX_LEVEL, MAX_LEVEL]``; negative levels drive the inhibitory DPI.

Connectivity file layout::

    [static]
    neuron,column,level
    [routing]
    12 -> 3:260        # input address 12 to neuron 3, column 260
    o7 -> 3:263        # output spikes of neuron 7 fed back to neuron 3
    [plastic]
    neuron,column,x0   # enables a learning synapse
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, LayoutError, RoutingError

MAX_LEVEL = 3


def quantize_level(value: float) -> int:
    """Round to the nearest integer level (ties away from zero), clipped to the level range."""
    mag = np.floor(abs(value) + 0.5)
    level = int(np.copysign(mag, value)) if mag else 0
    return max(-MAX_LEVEL, min(MAX_LEVEL, level))


@dataclass
class ConnectivityFragment:
    """Logical connections, not yet placed on synapse columns.

    ``synapses`` are ``(pre_neuron, post_neuron, level)``; ``inputs`` are
    ``(input_address, post_neuron, level)``; ``plastic`` are
    ``(pre_neuron, post_neuron, x0)``; ``plastic_inputs`` are
    ``(input_address, post_neuron, x0)``.
    """

    synapses: list[tuple[int, int, int]] = field(default_factory=list)
    inputs: list[tuple[int, int, int]] = field(default_factory=list)
    plastic: list[tuple[int, int, float]] = field(default_factory=list)
    plastic_inputs: list[tuple[int, int, float]] = field(default_factory=list)

    def extend(self, other: "ConnectivityFragment") -> "ConnectivityFragment":
        self.synapses.extend(other.synapses)
        self.inputs.extend(other.inputs)
        self.plastic.extend(other.plastic)
        self.plastic_inputs.extend(other.plastic_inputs)
        return self

    def connect(self, pre, post, level: int) -> None:
        """All-to-all static connections between two index collections."""
        if level == 0:
            return
        for j in pre:
            for i in post:
                self.synapses.append((int(j), int(i), int(level)))

    def feed(self, address: int, post, level: int) -> None:
        if level == 0:
            return
        for i in post:
            self.inputs.append((int(address), int(i), int(level)))


class ConnectivityMatrix:
    """Weights, learning state and routing for one chip."""

    def __init__(self, n_neurons: int = 256, n_plastic: int = 256, n_static: int = 256, n_inputs: int = 512):
        self.n_neurons = n_neurons
        self.n_plastic = n_plastic
        self.n_static = n_static
        self.n_inputs = n_inputs
        self.static_levels = np.zeros((n_neurons, n_static), dtype=np.int8)
        self.plastic_x = np.zeros((n_neurons, n_plastic), dtype=np.float64)
        self.plastic_enabled = np.zeros((n_neurons, n_plastic), dtype=bool)
        self.input_routing: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self.output_routing: dict[int, list[tuple[int, int]]] = defaultdict(list)
        # (neuron -> {column: source key}) used when placing fragments
        self._owners: dict[int, dict[int, tuple]] = defaultdict(dict)

    @classmethod
    def for_config(cls, cfg) -> "ConnectivityMatrix":
        return cls(cfg.n_neurons, cfg.n_plastic_cols, cfg.n_static_cols, cfg.n_inputs)

    @property
    def n_cols(self) -> int:
        return self.n_plastic + self.n_static

    def is_plastic(self, column: int) -> bool:
        return column < self.n_plastic

    def _check_target(self, neuron: int, column: int) -> None:
        if not 0 <= neuron < self.n_neurons:
            raise RoutingError(f"neuron {neuron} out of range [0, {self.n_neurons})")
        if not 0 <= column < self.n_cols:
            raise RoutingError(f"column {column} out of range [0, {self.n_cols})")

    def set_static(self, neuron: int, column: int, level: int) -> None:
        self._check_target(neuron, column)
        if column < self.n_plastic:
            raise RoutingError(f"column {column} is a plastic column")
        if abs(level) > MAX_LEVEL:
            raise RoutingError(f"level {level} outside [-{MAX_LEVEL}, {MAX_LEVEL}]")
        self.static_levels[neuron, column - self.n_plastic] = level

    def enable_plastic(self, neuron: int, column: int, x0: float = 0.0) -> None:
        self._check_target(neuron, column)
        if column >= self.n_plastic:
            raise RoutingError(f"column {column} is not a plastic column")
        if not 0.0 <= x0 <= 1.0:
            raise RoutingError(f"initial X {x0} outside [0, 1]")
        self.plastic_enabled[neuron, column] = True
        self.plastic_x[neuron, column] = x0

    def route_input(self, address: int, neuron: int, column: int) -> None:
        if not 0 <= address < self.n_inputs:
            raise RoutingError(f"input address {address} out of range [0, {self.n_inputs})")
        self._check_target(neuron, column)
        self.input_routing[address].append((neuron, column))

    def route_output(self, source: int, neuron: int, column: int) -> None:
        if not 0 <= source < self.n_neurons:
            raise RoutingError(f"source neuron {source} out of range")
        self._check_target(neuron, column)
        self.output_routing[source].append((neuron, column))

    # -- placement of logical fragments -------------------------------------

    def _claim(self, neuron: int, key: tuple, plastic: bool, preferred: int | None) -> int:
        owners = self._owners[neuron]
        for col, owner in owners.items():
            if owner == key:
                return col
        lo, hi = (0, self.n_plastic) if plastic else (self.n_plastic, self.n_cols)
        if preferred is not None and lo <= preferred < hi and preferred not in owners:
            owners[preferred] = key
            return preferred
        # external sources fill from the top so that neuron-indexed slots stay free
        order = range(hi - 1, lo - 1, -1) if key[0] == "ext" else range(lo, hi)
        for col in order:
            if col not in owners:
                owners[col] = key
                return col
        kind = "plastic" if plastic else "static"
        raise LayoutError(f"neuron {neuron} has no free {kind} column for source {key}")

    def merge(self, frag: ConnectivityFragment) -> "ConnectivityMatrix":
        """Place a logical fragment onto free synapse columns.

        Recurrent synapses from neuron ``j`` prefer static column
        ``n_plastic + j`` (plastic column ``j``), as on the physical array.
        """
        for pre, post, level in frag.synapses:
            if not 0 <= pre < self.n_neurons:
                raise LayoutError(f"pre-synaptic neuron {pre} out of range")
            col = self._claim(post, ("n", pre), False, self.n_plastic + pre)
            if self.static_levels[post, col - self.n_plastic] != 0:
                raise LayoutError(f"duplicate synapse {pre}->{post}")
            self.set_static(post, col, level)
            self.route_output(pre, post, col)
        ext_cols: dict[tuple[int, int], int] = {}
        for addr, post, level in frag.inputs:
            col = ext_cols.get((post, level))
            if col is None:
                col = self._claim(post, ("ext", level), False, None)
                ext_cols[(post, level)] = col
                self.set_static(post, col, level)
            self.route_input(addr, post, col)
        for pre, post, x0 in frag.plastic:
            col = self._claim(post, ("n", pre), True, pre)
            self.enable_plastic(post, col, x0)
            self.route_output(pre, post, col)
        for addr, post, x0 in frag.plastic_inputs:
            col = self._claim(post, ("in", addr), True, None)
            self.enable_plastic(post, col, x0)
            self.route_input(addr, post, col)
        return self

    # -- kernel tables -------------------------------------------------------

    def validate(self) -> None:
        for table, limit, name in (
            (self.input_routing, self.n_inputs, "input"),
            (self.output_routing, self.n_neurons, "output"),
        ):
            for src, targets in table.items():
                if not 0 <= src < limit:
                    raise RoutingError(f"{name} source {src} out of range")
                for neuron, column in targets:
                    self._check_target(neuron, column)

    @staticmethod
    def _csr(table: dict[int, list[tuple[int, int]]], n_sources: int):
        ptr = np.zeros(n_sources + 1, dtype=np.int64)
        for src, targets in table.items():
            ptr[src + 1] = len(targets)
        np.cumsum(ptr, out=ptr)
        nrn = np.zeros(ptr[-1], dtype=np.int64)
        col = np.zeros(ptr[-1], dtype=np.int64)
        for src, targets in table.items():
            if targets:
                arr = np.asarray(targets, dtype=np.int64)
                nrn[ptr[src] : ptr[src + 1]] = arr[:, 0]
                col[ptr[src] : ptr[src + 1]] = arr[:, 1]
        return ptr, nrn, col

    def input_csr(self):
        return self._csr(self.input_routing, self.n_inputs)

    def output_csr(self):
        return self._csr(self.output_routing, self.n_neurons)

    def fan_out(self, address: int) -> int:
        return len(self.input_routing.get(address, ()))

    def copy(self) -> "ConnectivityMatrix":
        other = ConnectivityMatrix(self.n_neurons, self.n_plastic, self.n_static, self.n_inputs)
        other.static_levels = self.static_levels.copy()
        other.plastic_x = self.plastic_x.copy()
        other.plastic_enabled = self.plastic_enabled.copy()
        for src, t in self.input_routing.items():
            other.input_routing[src] = list(t)
        for src, t in self.output_routing.items():
            other.output_routing[src] = list(t)
        other._owners = defaultdict(dict, {k: dict(v) for k, v in self._owners.items()})
        return other


def write_connectivity(path: str | os.PathLike, conn: ConnectivityMatrix) -> None:
    with open(path, "w") as fh:
        fh.write(f"# neurons={conn.n_neurons} plastic={conn.n_plastic} static={conn.n_static}\n")
        fh.write("[static]\n")
        for neuron, scol in zip(*np.nonzero(conn.static_levels)):
            level = int(conn.static_levels[neuron, scol])
            fh.write(f"{neuron},{scol + conn.n_plastic},{level}\n")
        fh.write("[routing]\n")
        for addr in sorted(conn.input_routing):
            for neuron, col in conn.input_routing[addr]:
                fh.write(f"{addr} -> {neuron}:{col}\n")
        for src in sorted(conn.output_routing):
            for neuron, col in conn.output_routing[src]:
                fh.write(f"o{src} -> {neuron}:{col}\n")
        fh.write("[plastic]\n")
        for neuron, col in zip(*np.nonzero(conn.plastic_enabled)):
            fh.write(f"{neuron},{col},{float(conn.plastic_x[neuron, col])!r}\n")


def read_connectivity(path: str | os.PathLike, cfg) -> ConnectivityMatrix:
    """Parse a connectivity file for a chip built from ``cfg``."""
    conn = ConnectivityMatrix.for_config(cfg)
    section = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{os.fspath(path)}:{lineno}"
            if line.startswith("["):
                section = line.strip("[] ").lower()
                if section not in ("static", "routing", "plastic"):
                    raise ConfigError(where, f"unknown section [{section}]")
                continue
            try:
                if section == "static":
                    neuron, col, level = (int(v) for v in line.split(","))
                    conn.set_static(neuron, col, level)
                elif section == "routing":
                    src, dst = (s.strip() for s in line.split("->"))
                    neuron, col = (int(v) for v in dst.split(":"))
                    if src.startswith("o"):
                        conn.route_output(int(src[1:]), neuron, col)
                    else:
                        conn.route_input(int(src), neuron, col)
                elif section == "plastic":
                    neuron, col, x0 = line.split(",")
                    conn.enable_plastic(int(neuron), int(col), float(x0))
                else:
                    raise ConfigError(where, "entry outside of a section")
            except (ValueError, RoutingError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(where, str(exc)) from None
    return conn
