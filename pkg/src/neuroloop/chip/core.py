"""Event-driven emulator of a ROLLS-like mixed-signal processor.

The emulator keeps one global simulated clock advanced in fixed steps of
``cfg.dt``. Input events falling inside a step are applied at its start;
every synapse and membrane DPI then evolves in closed form for the rest of
the step. Each neuron row shares one excitatory, one inhibitory and one
learning-synapse integrator (the linear DPI superposes its inputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import RoutingError, StreamError
from .aer import INPUT, OUTPUT, AerEvent, check_sorted, events_to_arrays
from .config import ChipConfig
from .connectivity import ConnectivityMatrix
from .kernel import deliver_input, run_steps
from .mismatch import MismatchModel


@dataclass
class EnergyMeter:
    sop_count: int = 0
    energy_per_sop: float = 77e-15

    @property
    def total_energy(self) -> float:
        return self.sop_count * self.energy_per_sop

    def report(self) -> dict:
        return {"sop_count": self.sop_count, "total_energy": self.total_energy}


class Chip:
    """Mutable chip instance; see :func:`build_chip`."""

    def __init__(self, cfg: ChipConfig, connectivity: ConnectivityMatrix | None = None):
        self.cfg = cfg
        conn = connectivity if connectivity is not None else ConnectivityMatrix.for_config(cfg)
        if (conn.n_neurons, conn.n_plastic, conn.n_static, conn.n_inputs) != (
            cfg.n_neurons, cfg.n_plastic_cols, cfg.n_static_cols, cfg.n_inputs
        ):
            raise RoutingError("connectivity dimensions do not match the chip config")
        conn.validate()
        self.conn = conn
        n = cfg.n_neurons
        self.mismatch = MismatchModel.sample(cfg.mismatch_cv, cfg.seed, n, cfg.n_cols)
        mm = self.mismatch
        dt = cfg.dt
        nrn = cfg.neuron
        self.tau_mem = nrn.membrane.tau * mm.tau_mem
        self.tau_exc = cfg.exc_synapse.tau * mm.tau_exc
        self.tau_inh = cfg.inh_synapse.tau * mm.tau_inh
        self.tau_plastic = cfg.exc_synapse.tau * mm.tau_plastic
        self.threshold = nrn.threshold * mm.threshold
        self._d_mem = np.exp(-dt / self.tau_mem)
        self._d_exc = np.exp(-dt / self.tau_exc)
        self._d_inh = np.exp(-dt / self.tau_inh)
        self._d_pl = np.exp(-dt / self.tau_plastic)
        self._g_mem = np.full(n, nrn.membrane.gain)
        self._j_exc = np.full(n, cfg.exc_synapse.gain * cfg.unit_current)
        self._j_inh = np.full(n, cfg.inh_synapse.gain * cfg.unit_current)
        self._j_pl = self._j_exc.copy()
        self._wfac = np.ascontiguousarray(mm.weight)
        self._ref_steps = int(round(nrn.refractory / dt))
        pl = cfg.plasticity
        self._d_ca = math.exp(-dt / pl.calcium_tau)
        self._pl = np.array(
            [pl.a, pl.b, pl.drift_rate, pl.theta_up_low, pl.theta_up_high,
             pl.theta_down_low, pl.theta_down_high, 0.0, pl.membrane_theta,
             pl.w_low, pl.w_high],
            dtype=np.float64,
        )
        self._tables()
        self.i_exc = np.zeros(n)
        self.i_inh = np.zeros(n)
        self.i_plastic = np.zeros(n)
        self.i_mem = np.zeros(n)
        self.calcium = np.zeros(n)
        self.bias = np.zeros(n)
        self.ref_left = np.zeros(n, dtype=np.int64)
        self._pending = np.zeros(n, dtype=bool)
        self._x_last = np.zeros((n, cfg.n_plastic_cols))
        self.time_us = 0
        self.energy = EnergyMeter(0, cfg.energy_per_sop)
        self._raster_t: list[np.ndarray] = []
        self._raster_n: list[np.ndarray] = []
        self._buf_t = np.empty(max(65536, 4 * n), np.int64)
        self._buf_n = np.empty(max(65536, 4 * n), np.int64)

    def _tables(self) -> None:
        self._in = self.conn.input_csr()
        self._out = self.conn.output_csr()
        self._static_before = self.conn.static_levels.copy()

    def refresh_routing(self) -> None:
        """Rebuild routing tables after editing ``conn`` in place."""
        self.conn.validate()
        self._tables()

    # -- inspection ----------------------------------------------------------

    @property
    def n_neurons(self) -> int:
        return self.cfg.n_neurons

    @property
    def time(self) -> float:
        return self.time_us * 1e-6

    def plastic_state(self) -> np.ndarray:
        """Learning-synapse variables with drift applied up to the current time."""
        self._sync_drift()
        return self.conn.plastic_x.copy()

    def _sync_drift(self) -> None:
        alpha = self.cfg.plasticity.drift_rate
        en = self.conn.plastic_enabled
        if alpha == 0 or not en.any():
            return
        x = self.conn.plastic_x
        span = np.maximum(self.time - self._x_last, 0.0)
        up = en & (x >= 0.5)
        down = en & (x < 0.5)
        x[up] = np.minimum(1.0, x[up] + alpha * span[up])
        x[down] = np.maximum(0.0, x[down] - alpha * span[down])
        self._x_last[en] = self.time

    def energy_report(self) -> dict:
        return self.energy.report()

    def read_raster(self) -> list[tuple[int, int]]:
        t, n = self.raster_arrays()
        return list(zip(t.tolist(), n.tolist()))

    def raster_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._raster_t:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(self._raster_t), np.concatenate(self._raster_n)

    # -- event handling ------------------------------------------------------

    def route_event(self, e: AerEvent) -> int:
        """Deliver one input event at the current time without advancing; return the SOP count."""
        if e.kind != INPUT:
            raise RoutingError(f"cannot route an event of kind {e.kind!r}")
        if not 0 <= e.address < self.cfg.n_inputs:
            raise RoutingError(f"unknown input address {e.address}")
        ptr, nrn, col = self._in
        sops = deliver_input(
            int(e.address), self.time, ptr, nrn, col, self.conn.static_levels, self.cfg.n_plastic_cols,
            self.conn.plastic_x, self.conn.plastic_enabled, self._x_last, self._wfac,
            self.i_exc, self.i_inh, self.i_plastic, self.i_mem, self.calcium,
            self._j_exc, self._j_inh, self._j_pl, self._pl,
        )
        self.energy.sop_count += int(sops)
        return int(sops)

    def advance_arrays(
        self, until_us: int, times: np.ndarray | None = None, addresses: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Advance to ``until_us``; inputs and outputs as ``(timestamps, addresses)`` arrays."""
        until_us = int(until_us)
        if until_us < self.time_us:
            raise StreamError(f"cannot advance backwards from {self.time_us} to {until_us} us")
        if times is None:
            times = np.zeros(0, np.int64)
            addresses = np.zeros(0, np.int64)
        times = np.asarray(times, dtype=np.int64)
        addresses = np.asarray(addresses, dtype=np.int64)
        check_sorted(times)
        if times.size:
            if times[0] < self.time_us or times[-1] >= until_us:
                raise StreamError(
                    f"event timestamps must lie in [{self.time_us}, {until_us}) us, "
                    f"got [{times[0]}, {times[-1]}]"
                )
            if addresses.min() < 0 or addresses.max() >= self.cfg.n_inputs:
                bad = addresses[(addresses < 0) | (addresses >= self.cfg.n_inputs)][0]
                raise RoutingError(f"unknown input address {bad}")
        dt_us = self.cfg.dt_us
        n_steps = -(-(until_us - self.time_us) // dt_us)
        steps = (times - self.time_us) // dt_us
        return self._run(n_steps, (steps, addresses))

    def advance(self, until_us: int, events=()) -> list[AerEvent]:
        times, addrs = events_to_arrays(events)
        st, sn = self.advance_arrays(until_us, times, addrs)
        return [AerEvent(t, a, OUTPUT) for t, a in zip(st.tolist(), sn.tolist())]

    def _run(self, n_steps: int, ev):
        cfg = self.cfg
        steps, addrs = ev
        ptr_in, nrn_in, col_in = self._in
        ptr_out, nrn_out, col_out = self._out
        times_out, nrn_out_list = [], []
        ev_i = 0
        done = 0
        while done < n_steps:
            k, n_sp, sops, ev_i = run_steps(
                self.time_us, cfg.dt_us, n_steps - done, steps - done, addrs, ev_i,
                ptr_in, nrn_in, col_in, ptr_out, nrn_out, col_out,
                self.conn.static_levels, cfg.n_plastic_cols, self.conn.plastic_x, self.conn.plastic_enabled,
                self._x_last, self._wfac, self.i_exc, self.i_inh, self.i_plastic, self.i_mem,
                self.ref_left, self.calcium, self.bias, self._pending,
                self._d_exc, self._d_inh, self._d_pl, self._d_mem, self._g_mem, self.threshold,
                self._j_exc, self._j_inh, self._j_pl, cfg.neuron.reset_current, self._ref_steps,
                self._d_ca, cfg.plasticity.calcium_jump, self._pl,
                self._buf_t, self._buf_n,
            )
            done += k
            self.time_us += k * cfg.dt_us
            self.energy.sop_count += int(sops)
            if n_sp:
                times_out.append(self._buf_t[:n_sp].copy())
                nrn_out_list.append(self._buf_n[:n_sp].copy())
        if not times_out:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        sp_t = np.concatenate(times_out) if len(times_out) > 1 else times_out[0]
        sp_n = np.concatenate(nrn_out_list) if len(nrn_out_list) > 1 else nrn_out_list[0]
        self._raster_t.append(sp_t)
        self._raster_n.append(sp_n)
        return sp_t, sp_n


def build_chip(cfg: ChipConfig | None = None, connectivity: ConnectivityMatrix | None = None) -> Chip:
    """Instantiate a chip at time 0 with all currents at zero."""
    return Chip(cfg if cfg is not None else ChipConfig(), connectivity)
