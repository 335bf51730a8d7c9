"""Spiking WTA trials and their continuous-field counterparts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chip import ChipConfig, ConnectivityMatrix, build_chip
from .dnf import FieldParams, KernelParams, detect_peaks, gaussian_input, simulate_field
from .wta import WtaLayout, WtaSpec, compile_wta


@dataclass(frozen=True)
class WtaTrialParams:
    spec: WtaSpec = WtaSpec()
    input_level: int = 2
    input_width: float = 2.0
    duration: float = 1.0
    settle: float = 0.3
    background_fraction: float = 0.2


def build_wta_chip(cfg: ChipConfig, spec: WtaSpec, input_level: int, seed: int):
    """Chip with a WTA at neurons ``0 .. n_exc+n_inh-1``; input address ``i`` feeds excitatory neuron ``i``."""
    layout = WtaLayout(0, spec.n_exc, spec.n_exc, spec.n_inh)
    conn = ConnectivityMatrix.for_config(cfg)
    frag = compile_wta(spec, layout, cfg.n_neurons)
    for i in range(spec.n_exc):
        frag.feed(i, [i], input_level)
    conn.merge(frag)
    return build_chip(cfg.replace(seed=seed), conn), layout


def poisson_profile_events(rates: np.ndarray, t0: float, duration: float, rng: np.random.Generator):
    """Independent Poisson trains, one per address, with the given rates (Hz)."""
    counts = rng.poisson(rates * duration)
    addrs = np.repeat(np.arange(rates.size), counts)
    times = rng.uniform(t0, t0 + duration, size=addrs.size)
    times_us = np.floor(times * 1e6).astype(np.int64)
    order = np.lexsort((addrs, times_us))
    return times_us[order], addrs[order]


def two_target_rates(n: int, loc_a: int, loc_b: int, rate_a: float, rate_b: float, width: float) -> np.ndarray:
    x = np.arange(n)
    return rate_a * np.exp(-((x - loc_a) ** 2) / (2 * width**2)) + rate_b * np.exp(-((x - loc_b) ** 2) / (2 * width**2))


@dataclass
class WtaTrialResult:
    seed: int
    loc_a: int
    loc_b: int
    spiking_winner: str
    field_winner: str
    counts: np.ndarray
    input_events: tuple[np.ndarray, np.ndarray]
    output_events: tuple[np.ndarray, np.ndarray]
    sop_count: int = 0
    energy: float = 0.0


def field_winner(n: int, loc_a: int, loc_b: int, strength_a: float, strength_b: float, width: float) -> str:
    """Winner chosen by the continuous neural field driven by the same input profile."""
    p = FieldParams(tau=0.01, h=-5.0, n=n, dx=1.0, beta=4.0)
    k = KernelParams(a_exc=6.0, a_inh=2.0, sigma_exc=2.0, sigma_inh=n)
    scale = 6.5 / max(strength_a, strength_b)
    inp = gaussian_input(p, loc_a, strength_a * scale, width) + gaussian_input(p, loc_b, strength_b * scale, width)
    s, _ = simulate_field(p, k, inp, 1.0 * p.tau * 30, p.tau / 20)
    peaks = detect_peaks(s, 0.0)
    if not peaks:
        return "none"
    best = max(peaks, key=lambda q: q.value)
    return "A" if abs(best.position - loc_a) < abs(best.position - loc_b) else "B"


def run_two_target_trial(
    cfg: ChipConfig,
    params: WtaTrialParams,
    seed: int,
    rate_a: float = 90.0,
    rate_b: float = 60.0,
    min_separation: int = 16,
) -> WtaTrialResult:
    rng = np.random.default_rng(seed)
    n = params.spec.n_exc
    margin = 6
    while True:
        loc_a, loc_b = (int(v) for v in rng.integers(margin, n - margin, size=2))
        if abs(loc_a - loc_b) >= min_separation:
            break
    chip, layout = build_wta_chip(cfg, params.spec, params.input_level, seed)
    rates = two_target_rates(n, loc_a, loc_b, rate_a, rate_b, params.input_width)
    times, addrs = poisson_profile_events(rates, 0.0, params.duration, rng)
    until = int(round(params.duration * 1e6))
    st, sn = chip.advance_arrays(until, times, addrs)
    late = st >= params.settle * 1e6
    exc = sn < n
    counts = np.bincount(sn[late & exc], minlength=n)
    if counts.sum() == 0:
        winner = "none"
    else:
        best = int(np.argmax(np.convolve(counts, np.ones(5), mode="same")))
        winner = "A" if abs(best - loc_a) < abs(best - loc_b) else "B"
    fw = field_winner(n, loc_a, loc_b, rate_a, rate_b, params.input_width)
    rep = chip.energy_report()
    return WtaTrialResult(seed, loc_a, loc_b, winner, fw, counts, (times, addrs), (st, sn),
                          rep["sop_count"], rep["total_energy"])


def noisy_input_events(n: int, center: float, width: float, total_rate: float, background: float,
                       duration: float, rng: np.random.Generator):
    """Gaussian-profile events plus a uniform background fraction of all events."""
    n_events = rng.poisson(total_rate * duration)
    n_bg = rng.binomial(n_events, background)
    pos_sig = np.clip(np.rint(rng.normal(center, width, n_events - n_bg)), 0, n - 1).astype(np.int64)
    pos_bg = rng.integers(0, n, n_bg)
    addrs = np.concatenate([pos_sig, pos_bg])
    times = np.floor(rng.uniform(0, duration, addrs.size) * 1e6).astype(np.int64)
    order = np.lexsort((addrs, times))
    return times[order], addrs[order]


@dataclass
class NoiseTrialResult:
    seed: int
    input_std: float
    output_std: float
    input_events: tuple[np.ndarray, np.ndarray]
    output_events: tuple[np.ndarray, np.ndarray]


def run_noise_trial(cfg: ChipConfig, params: WtaTrialParams, seed: int, total_rate: float = 3000.0,
                    width: float = 3.0) -> NoiseTrialResult:
    rng = np.random.default_rng(seed)
    n = params.spec.n_exc
    center = float(rng.integers(16, n - 16))
    chip, _ = build_wta_chip(cfg, params.spec, params.input_level, seed)
    times, addrs = noisy_input_events(n, center, width, total_rate, params.background_fraction,
                                      params.duration, rng)
    st, sn = chip.advance_arrays(int(round(params.duration * 1e6)), times, addrs)
    out = sn[sn < n]
    out_std = float(np.std(out)) if out.size else float("nan")
    return NoiseTrialResult(seed, float(np.std(addrs)), out_std, (times, addrs), (st, sn))


@dataclass
class WtaStreamResult:
    """One noisy two-target run: rasters, winner identity and spatial spread."""

    seed: int
    loc_a: int
    loc_b: int
    spiking_winner: str
    field_winner: str
    input_var: float
    output_var: float
    input_events: tuple[np.ndarray, np.ndarray]
    output_events: tuple[np.ndarray, np.ndarray]
    sop_count: int
    energy: float


def _winner(counts: np.ndarray, loc_a: int, loc_b: int) -> str:
    if counts.sum() == 0:
        return "none"
    best = int(np.argmax(np.convolve(counts, np.ones(5), mode="same")))
    return "A" if abs(best - loc_a) < abs(best - loc_b) else "B"


def _spread(addrs: np.ndarray) -> float:
    return float(np.var(addrs)) if addrs.size else float("nan")


def run_wta_stream(
    cfg: ChipConfig,
    params: WtaTrialParams,
    seed: int,
    loc_a: int,
    loc_b: int,
    rate_a: float = 90.0,
    rate_b: float = 60.0,
    background_rate: float = 2.0,
) -> WtaStreamResult:
    """Two Gaussian targets plus uniform background events fed to a compiled WTA.

    ``rate_a`` and ``rate_b`` are peak per-address rates (Hz); every address
    also fires at ``background_rate``. Variances are taken over the input
    addresses and the excitatory output neuron indices after ``settle``.
    """
    rng = np.random.default_rng(seed)
    n = params.spec.n_exc
    chip, _ = build_wta_chip(cfg, params.spec, params.input_level, seed)
    rates = two_target_rates(n, loc_a, loc_b, rate_a, rate_b, params.input_width) + background_rate
    times, addrs = poisson_profile_events(rates, 0.0, params.duration, rng)
    st, sn = chip.advance_arrays(int(round(params.duration * 1e6)), times, addrs)
    late = st >= params.settle * 1e6
    exc = sn < n
    counts = np.bincount(sn[late & exc], minlength=n)
    strength = max(rate_a, rate_b)
    fw = field_winner(n, loc_a, loc_b, rate_a, rate_b, params.input_width) if strength > 0 else "none"
    rep = chip.energy_report()
    return WtaStreamResult(seed, loc_a, loc_b, _winner(counts, loc_a, loc_b), fw,
                           _spread(addrs[times >= params.settle * 1e6]), _spread(sn[late & exc]),
                           (times, addrs), (st, sn), rep["sop_count"], rep["total_energy"])
