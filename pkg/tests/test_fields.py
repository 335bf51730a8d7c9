import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from neuroloop.chip import ChipConfig
from neuroloop.config import from_dict, load_config
from neuroloop.errors import FieldFault, LayoutError, StabilityError
from neuroloop.fields import (
    PERIODIC,
    FieldParams,
    FieldState,
    KernelParams,
    WtaLayout,
    WtaSpec,
    compile_wta,
    detect_peaks,
    exc_matrix,
    field_step,
    gaussian_input,
    mexican_hat,
    sigmoid,
    simulate_field,
)
from neuroloop.fields.experiments import WtaTrialParams, field_winner, run_noise_trial, run_wta_stream


def shipped(name):
    d = load_config(name)["dnf"]
    return from_dict(FieldParams, d["field"]), from_dict(KernelParams, d["kernel"]), d


def run_preset(name, after_tau):
    p, k, d = shipped(name)
    stim = d["stimulus"]
    dt = d["dt_tau"] * p.tau
    inp = gaussian_input(p, stim["center"], stim["amplitude"], stim["width"])
    s, _ = simulate_field(p, k, inp, stim["duration_tau"] * p.tau, dt)
    s, _ = simulate_field(p, k, 0.0, after_tau * p.tau, dt, state=s)
    return p, s, stim["center"]


class TestKernel:
    def test_origin(self):
        k = KernelParams(3.0, 1.25, 1.0, 2.0)
        assert mexican_hat(k, 0.0) == pytest.approx(1.75, rel=1e-15)

    def test_reference_value(self):
        k = KernelParams(2.0, 1.0, 1.0, 2.0)
        expected = 2 * mp.exp(-2) - mp.exp(mp.mpf(-0.5))
        assert mexican_hat(k, 2.0) == pytest.approx(float(expected), rel=1e-14)
        assert mexican_hat(k, 2.0) == pytest.approx(-0.33586, abs=1e-5)

    @given(st.floats(0, 50), st.floats(0, 5), st.floats(0, 5))
    def test_symmetric(self, d, a, b):
        k = KernelParams(a, b, 1.0, 3.0)
        assert mexican_hat(k, d) == mexican_hat(k, -d)

    @given(st.floats(0.1, 3.0))
    def test_tails_vanish(self, sigma_exc):
        k = KernelParams(5.0, 5.0, sigma_exc, 2 * sigma_exc)
        assert abs(mexican_hat(k, 8.01 * k.sigma_inh)) < 1e-8

    def test_non_mexican_hat_warns(self):
        with pytest.warns(UserWarning):
            KernelParams(1.0, 1.0, 2.0, 1.0)


class TestSigmoid:
    def test_midpoint(self):
        assert sigmoid(0.0) == 0.5

    def test_limits(self):
        assert sigmoid(1e6) == 1.0
        assert sigmoid(-1e6) == 0.0

    def test_reference(self):
        assert sigmoid(1.0, 4.0) == pytest.approx(float(1 / (1 + mp.exp(-4))), rel=1e-15)
        assert sigmoid(1.0, 4.0) == pytest.approx(0.98201, abs=1e-5)

    @given(st.floats(-100, 100), st.floats(0.1, 20))
    def test_symmetry(self, u, beta):
        assert sigmoid(u, beta) + sigmoid(-u, beta) == pytest.approx(1.0, abs=1e-15)


class TestFieldStep:
    def test_linear_decay_against_closed_form(self):
        p, k = FieldParams(), KernelParams(0.0, 0.0, 1.0, 2.0)
        u0 = np.linspace(-3.0, 2.0, p.n)
        s = FieldState(u0.copy())
        dt = p.tau / 100
        for i in range(1, 501):
            s = field_step(s, p, k, 0.0, dt)
            euler = p.h + (u0 - p.h) * (1 - dt / p.tau) ** i
            np.testing.assert_allclose(s.u, euler, rtol=1e-12, atol=1e-12)
        # after 5 tau the deviation from rest is below 1% of |h|
        assert np.max(np.abs(s.u - p.h)) <= 0.01 * abs(p.h)

    def test_decay_is_monotone(self):
        p, k = FieldParams(), KernelParams()
        s = FieldState(np.random.default_rng(0).normal(0, 3, p.n))
        prev = np.max(np.abs(s.u - p.h))
        for _ in range(200):
            s = field_step(s, p, k, 0.0, p.tau / 20)
            cur = np.max(np.abs(s.u - p.h))
            assert cur <= prev
            prev = cur

    @given(st.integers(-20, 20))
    def test_periodic_translation(self, m):
        p = FieldParams(n=48, boundary=PERIODIC)
        k = KernelParams(4.0, 1.5, 2.0, 5.0)
        inp = gaussian_input(p, 10, 7.0, 2.0) + 0.5 * gaussian_input(p, 30, 7.0, 3.0)
        a, _ = simulate_field(p, k, inp, 3 * p.tau, p.tau / 10)
        b, _ = simulate_field(p, k, np.roll(inp, m), 3 * p.tau, p.tau / 10)
        np.testing.assert_allclose(np.roll(a.u, m), b.u, rtol=0, atol=1e-12)

    def test_fft_path_matches_direct(self):
        from neuroloop.fields.dnf import _kernel_row, lateral_input
        k = KernelParams(3.0, 1.0, 2.0, 6.0)
        for boundary in ("zero", PERIODIC):
            p = FieldParams(n=600, boundary=boundary) if boundary == PERIODIC else FieldParams(n=600)
            u = np.random.default_rng(1).normal(0, 2, p.n)
            direct = np.array([np.dot(mexican_hat(k, np.abs(i - np.arange(p.n)) if boundary != PERIODIC
                               else np.minimum(np.abs(i - np.arange(p.n)), p.n - np.abs(i - np.arange(p.n)))),
                               sigmoid(u, p.beta)) for i in range(p.n)])
            np.testing.assert_allclose(lateral_input(u, p, k), direct, atol=1e-9)
            assert _kernel_row(k, p.n, p.dx, p.boundary).size in (p.n, 2 * p.n - 1)

    def test_stability_guard(self):
        p = FieldParams()
        with pytest.raises(StabilityError):
            field_step(FieldState.resting(p), p, KernelParams(), 0.0, p.tau / 5)

    def test_non_finite_input(self):
        p = FieldParams()
        with pytest.raises(FieldFault):
            field_step(FieldState.resting(p), p, KernelParams(), np.full(p.n, np.inf), p.tau / 20)


class TestPeaks:
    def test_empty(self):
        assert detect_peaks(np.full(10, -1.0)) == []

    def test_symmetric_bump(self):
        x = np.arange(64)
        u = 3 * np.exp(-((x - 32) ** 2) / 8.0) - 1
        (peak,) = detect_peaks(u)
        assert peak.position == pytest.approx(32.0, abs=1e-12)
        assert peak.value == pytest.approx(2.0)

    def test_two_bumps_in_order(self):
        x = np.arange(64)
        u = np.exp(-((x - 50) ** 2) / 4.0) + np.exp(-((x - 10) ** 2) / 4.0) - 0.5
        peaks = detect_peaks(u)
        assert [round(q.position) for q in peaks] == [10, 50]


class TestShippedPresets:
    def test_selfsustain_holds_bump(self):
        p, s, center = run_preset("dnf_selfsustain", 100)
        peaks = detect_peaks(s)
        assert len(peaks) == 1 and abs(peaks[0].position - center) < 1

    def test_decay_returns_to_rest(self):
        p, s, _ = run_preset("dnf_decay", 5)
        assert np.max(np.abs(s.u - p.h)) <= 0.01 * abs(p.h)


class TestCompileWta:
    def test_no_lateral_without_excitation(self):
        spec = WtaSpec(16, 4, KernelParams(0.0, 0.0, 1.0, 4.0))
        frag = compile_wta(spec, WtaLayout(0, 16, 16, 4))
        exc = set(range(16))
        assert not [s for s in frag.synapses if s[0] in exc and s[1] in exc]

    def test_all_to_all_pools(self):
        spec = WtaSpec(16, 4, KernelParams(3.0, 0.0, 1.5, 4.0))
        frag = compile_wta(spec, WtaLayout(0, 16, 16, 4))
        e2i = [s for s in frag.synapses if s[0] < 16 <= s[1]]
        i2e = [s for s in frag.synapses if s[0] >= 16 > s[1]]
        assert len(e2i) == 16 * 4 and all(lv == 1 for *_, lv in e2i)
        assert len(i2e) == 4 * 16 and all(lv == -1 for *_, lv in i2e)

    @given(st.floats(0.5, 3.0), st.floats(0.5, 4.0))
    def test_reflection_symmetry(self, a, sigma):
        w = exc_matrix(WtaSpec(32, 8, KernelParams(a, 0.0, sigma, 10.0)))
        assert np.array_equal(w, w[::-1, ::-1]) and np.array_equal(w, w.T)

    def test_quantized_levels(self):
        w = exc_matrix(WtaSpec(16, 4, KernelParams(3.0, 0.0, 1.5, 8.0)))
        # 3 * exp(-d^2 / 4.5): 3.0, 2.40, 1.23, 0.41 -> 3, 2, 1, 0
        assert list(w[0, :5]) == [3, 2, 1, 0, 0]

    def test_capacity_error_lists_overflow(self):
        with pytest.raises(LayoutError, match="overflow 16"):
            compile_wta(WtaSpec(), WtaLayout(200, 264, 64, 16), n_neurons=264)


class TestSpikingWta:
    def test_stronger_input_wins(self):
        params = WtaTrialParams()
        res = run_wta_stream(ChipConfig(), params, 3, 20, 44, rate_a=100.0, rate_b=60.0, background_rate=0.0)
        assert res.field_winner == "A" and res.spiking_winner == "A"
        t, n = res.output_events
        late = n[(t >= params.settle * 1e6) & (n < 64)]
        near_a = np.sum(np.abs(late - 20) <= 4)
        near_b = np.sum(np.abs(late - 44) <= 4)
        assert near_a > 10 * max(near_b, 1)

    def test_zero_input_silent(self):
        res = run_wta_stream(ChipConfig(), WtaTrialParams(), 0, 20, 44, 0.0, 0.0, 0.0)
        assert res.output_events[0].size == 0 and res.sop_count == 0
        assert res.spiking_winner == "none"

    def test_field_oracle_prefers_stronger(self):
        assert field_winner(64, 20, 44, 90.0, 60.0, 2.0) == "A"
        assert field_winner(64, 20, 44, 60.0, 90.0, 2.0) == "B"

    def test_noise_reduced(self):
        res = run_noise_trial(ChipConfig(), WtaTrialParams(), 0)
        assert res.output_std < res.input_std
