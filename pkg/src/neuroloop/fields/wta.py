"""Compile soft winner-take-all populations onto chip connectivity.

An excitatory pool with Gaussian lateral excitation shares a small
inhibitory pool: every excitatory neuron excites every inhibitory neuron,
and every inhibitory neuron inhibits every excitatory neuron. Together
these realize the Mexican-hat interaction of a neural field with spiking
neurons and fixed-weight synapses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chip.connectivity import MAX_LEVEL, ConnectivityFragment, quantize_level
from ..errors import LayoutError
from .dnf import KernelParams


@dataclass(frozen=True)
class WtaSpec:
    n_exc: int = 64
    n_inh: int = 16
    kernel: KernelParams = KernelParams(a_exc=3.0, a_inh=0.0, sigma_exc=1.5, sigma_inh=16.0)
    exc_to_inh: int = 1
    inh_to_exc: int = -1
    self_exc: int | None = None
    periodic: bool = False


@dataclass(frozen=True)
class WtaLayout:
    """Neuron index ranges occupied by a compiled WTA."""

    exc_start: int
    inh_start: int
    n_exc: int
    n_inh: int

    @property
    def exc(self) -> range:
        return range(self.exc_start, self.exc_start + self.n_exc)

    @property
    def inh(self) -> range:
        return range(self.inh_start, self.inh_start + self.n_inh)


def lateral_levels(spec: WtaSpec) -> np.ndarray:
    """Quantized excitatory level for each index distance ``0 .. n_exc-1``."""
    d = np.arange(spec.n_exc, dtype=float)
    k = spec.kernel
    raw = k.a_exc * np.exp(-d * d / (2 * k.sigma_exc**2)) if k.a_exc > 0 else np.zeros_like(d)
    levels = np.array([quantize_level(v) for v in raw], dtype=int)
    if spec.self_exc is not None:
        levels[0] = spec.self_exc
    return levels


def exc_matrix(spec: WtaSpec) -> np.ndarray:
    """Dense ``post x pre`` level matrix of the excitatory pool."""
    idx = np.arange(spec.n_exc)
    d = np.abs(idx[:, None] - idx[None, :])
    if spec.periodic:
        d = np.minimum(d, spec.n_exc - d)
    return lateral_levels(spec)[d]


def compile_wta(spec: WtaSpec, layout: WtaLayout, n_neurons: int = 256) -> ConnectivityFragment:
    """Generate the static synapses of one WTA population."""
    if layout.n_exc != spec.n_exc or layout.n_inh != spec.n_inh:
        raise LayoutError("layout sizes differ from the WTA spec")
    end = max(layout.exc_start + spec.n_exc, layout.inh_start + spec.n_inh)
    if end > n_neurons or layout.exc_start < 0 or layout.inh_start < 0:
        raise LayoutError(f"WTA needs neurons up to index {end - 1}; chip has {n_neurons} (overflow {end - n_neurons})")
    if set(layout.exc) & set(layout.inh):
        raise LayoutError("excitatory and inhibitory ranges overlap")
    for name, level in (("exc_to_inh", spec.exc_to_inh), ("inh_to_exc", spec.inh_to_exc)):
        if abs(level) > MAX_LEVEL:
            raise LayoutError(f"{name} level {level} outside [-{MAX_LEVEL}, {MAX_LEVEL}]")
    frag = ConnectivityFragment()
    w = exc_matrix(spec)
    for post in range(spec.n_exc):
        for pre in range(spec.n_exc):
            if w[post, pre]:
                frag.synapses.append((layout.exc_start + pre, layout.exc_start + post, int(w[post, pre])))
    frag.connect(layout.exc, layout.inh, abs(spec.exc_to_inh))
    frag.connect(layout.inh, layout.exc, -abs(spec.inh_to_exc))
    return frag
