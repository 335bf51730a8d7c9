import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neuroloop.agents.braitenberg import (
    BraitenbergParams,
    MotorGains,
    build_braitenberg,
    decode_motors,
    population_rate,
)
from neuroloop.agents.dvs import DvsModel, GyroModel, led_transitions, simulate_dvs, simulate_gyro
from neuroloop.agents.layout import NetworkLayout
from neuroloop.agents.navigation import NavigationParams, default_arena_suite, run_navigation_trial
from neuroloop.agents.sequence import (
    ProtocolParams,
    SequenceParams,
    build_sequence_network,
    learning_margin,
    run_sequence_experiment,
    sample_items,
)
from neuroloop.agents.world import (
    Arena,
    Circle,
    RobotLimits,
    RobotState,
    Target,
    arena_from_dict,
    arena_to_dict,
    read_arena,
    robot_step,
    wrap_angle,
    write_arena,
)
from neuroloop.errors import ConfigError, LayoutError, ParameterError
from neuroloop.fields import detect_peaks


def poisson_stream(rng, rates, duration_us, t0_us=0):
    """Sorted ``(times, addresses)`` for independent Poisson sources."""
    ts, ads = [], []
    for addr, rate in rates.items():
        n = rng.poisson(rate * duration_us * 1e-6)
        ts.append(rng.integers(t0_us, t0_us + duration_us, n))
        ads.append(np.full(n, addr, np.int64))
    t, a = np.concatenate(ts), np.concatenate(ads)
    order = np.lexsort((a, t))
    return t[order], a[order]


# ---------------------------------------------------------------- kinematics

class TestRobotStep:
    def test_straight_line(self):
        r = robot_step(RobotState(), 0.1, 0.0, 1.0)
        assert (r.x, r.y, r.theta) == (pytest.approx(0.1), 0.0, 0.0)

    def test_pure_rotation(self):
        r = robot_step(RobotState(1.0, 1.0, 0.0), 0.0, math.pi, 1.0, limits=RobotLimits(omega_max=4.0))
        assert (r.x, r.y) == (1.0, 1.0)
        assert r.theta == pytest.approx(math.pi)

    def test_commands_are_clamped(self):
        lim = RobotLimits(v_max=0.3, omega_max=2.0)
        r = robot_step(RobotState(), 5.0, -9.0, 0.01, limits=lim)
        assert r.v == 0.3 and r.omega == -2.0

    def test_arc_convergence(self):
        v, w, total = 0.2, 1.0, 1.0
        exact = (v / w * math.sin(w * total), v / w * (1 - math.cos(w * total)))
        errors = []
        for k in (10, 100, 1000):
            r = RobotState()
            for _ in range(k):
                r = robot_step(r, v, w, total / k, limits=RobotLimits(omega_max=2.0))
            errors.append(math.hypot(r.x - exact[0], r.y - exact[1]))
        assert errors[0] > errors[1] > errors[2]
        # first-order scheme: ten times more sub-steps, about ten times less error
        assert errors[1] / errors[2] == pytest.approx(10, rel=0.05)

    def test_collision_freezes_pose(self):
        arena = Arena(obstacles=(Circle(1.0, 1.25, 0.1),))
        r = RobotState(0.84, 1.25, 0.0)
        r = robot_step(r, 0.3, 0.0, 0.1, arena)
        assert r.collided and r.x == 0.84
        after = robot_step(r, 0.3, 1.0, 0.1, arena)
        assert (after.x, after.y, after.theta, after.collided) == (r.x, r.y, r.theta, True)

    def test_walls_collide(self):
        r = robot_step(RobotState(0.06, 1.0, math.pi), 0.3, 0.0, 0.1, Arena())
        assert r.collided

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            robot_step(RobotState(), 0.1, 0.0, 0.0)

    @given(st.floats(-50, 50))
    def test_wrap_range(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


class TestArena:
    def test_target_inside_obstacle(self):
        with pytest.raises(ConfigError):
            Arena(obstacles=(Circle(2.25, 1.25, 0.2),))

    def test_obstacle_out_of_bounds(self):
        with pytest.raises(ConfigError):
            Arena(obstacles=(Circle(0.05, 1.0, 0.1),))

    def test_file_round_trip(self, tmp_path):
        arena = default_arena_suite()["three_obstacles"]
        write_arena(tmp_path / "a.yaml", arena)
        assert read_arena(tmp_path / "a.yaml") == arena
        assert arena_from_dict(arena_to_dict(arena), arena.name) == arena


# ---------------------------------------------------------------- sensors

class TestDvs:
    def test_still_scene_is_silent(self):
        arena = Arena(obstacles=(Circle(1.2, 1.25, 0.1),), target=Target(2.25, 1.25, 0.0))
        ev = simulate_dvs(arena, RobotState(0.25, 1.25, 0.0), 1.0, seed=0)
        assert len(ev) == 0

    def test_led_only_upper_half_at_transitions(self):
        model = DvsModel()
        arena = Arena(target=Target(2.25, 1.25, 1.0))
        ev = simulate_dvs(arena, RobotState(0.25, 1.25, 0.0), 2.0, seed=1, model=model)
        assert len(ev) > 0
        assert np.all(ev.y < model.height / 2)
        assert sorted(set(ev.t.tolist())) == [0, 500_000, 1_000_000, 1_500_000]

    def test_led_transition_times(self):
        np.testing.assert_allclose(led_transitions(50.0, 0.0, 0.05), np.arange(5) * 0.01)
        assert led_transitions(0.0, 0.0, 1.0).size == 0

    def test_moving_obstacles_project_low(self):
        model = DvsModel()
        arena = Arena(obstacles=(Circle(1.0, 1.0, 0.1), Circle(1.2, 1.5, 0.1)), target=Target(2.25, 1.25, 0.0))
        ev = simulate_dvs(arena, RobotState(0.25, 1.25, 0.0, v=0.2, omega=0.3), 0.5, seed=2, model=model)
        assert len(ev) > 0 and np.all(ev.y >= model.height / 2)

    def test_rotation_centroid_drift(self):
        model = DvsModel(k_motion=2000.0)
        arena = Arena(obstacles=(Circle(1.5, 1.25, 0.02),), target=Target(2.25, 0.3, 0.0))
        w, period, n = 0.4, 0.01, 40
        r = RobotState(0.25, 1.25, 0.25, 0.0, w)
        rng = np.random.default_rng(3)
        t, cent = [], []
        for k in range(n):
            ev = simulate_dvs(arena, r, period, rng, model, t0=k * period)
            if len(ev):
                t.append((k + 0.5) * period)
                cent.append(ev.x.mean())
            r = robot_step(r, 0.0, w, period, limits=RobotLimits(omega_max=1.0))
        slope = np.polyfit(t, cent, 1)[0]
        # bearing of the obstacle falls at rate w; its column moves right at f * sec^2(bearing) * w
        bearing = np.array([0.25 - w * tt for tt in t])
        expected = float(np.mean(model.focal * w / np.cos(bearing) ** 2))
        assert slope > 0
        assert slope == pytest.approx(expected, rel=0.1)

    def test_seeded(self):
        arena = default_arena_suite()["three_obstacles"]
        r = RobotState(0.25, 1.25, 0.0, 0.2, 0.5)
        a = simulate_dvs(arena, r, 0.2, seed=7)
        b = simulate_dvs(arena, r, 0.2, seed=7)
        assert np.array_equal(a.t, b.t) and np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


class TestGyro:
    def test_still_is_silent(self):
        assert simulate_gyro(RobotState(), 1.0, seed=0).size == 0

    def test_rate_tracks_turning(self):
        t = simulate_gyro(RobotState(omega=-0.5), 10.0, seed=0, model=GyroModel(1000.0))
        assert t.size == pytest.approx(5000, rel=0.05)
        assert np.all(np.diff(t) >= 0)


# ---------------------------------------------------------------- layout

class TestLayout:
    def test_pack_and_counts(self):
        lay = NetworkLayout.pack({"a": 3, "b": 2})
        assert lay["b"] == range(3, 5)
        assert lay.counts(np.array([0, 1, 4, 100])) == {"a": 2, "b": 1}

    def test_overlap_rejected(self):
        with pytest.raises(LayoutError):
            NetworkLayout({"a": range(0, 10), "b": range(5, 12)})

    def test_overflow_reports_amount(self):
        with pytest.raises(LayoutError, match="overflow 4"):
            NetworkLayout.pack({"a": 200, "b": 60})

    def test_navigation_layout_fits(self):
        lay = BraitenbergParams().layout()
        assert lay.total <= 256
        seen = set()
        for name in lay:
            r = set(lay[name])
            assert not r & seen
            seen |= r

    def test_navigation_overflow(self):
        with pytest.raises(LayoutError):
            build_braitenberg(BraitenbergParams(n_motor=40))


# ---------------------------------------------------------------- motor decode

class TestDecode:
    def test_example_speed(self):
        lay = BraitenbergParams().layout()
        spikes = np.repeat(np.array(list(lay["speed"])), 5)  # 5 spikes each in 0.1 s = 50 Hz
        v, w = decode_motors(spikes, 0.1, lay, MotorGains(g_v=0.002))
        assert v == pytest.approx(0.1) and w == 0.0

    def test_silence_halts(self):
        lay = BraitenbergParams().layout()
        assert decode_motors(np.zeros(0, np.int64), 0.1, lay) == (0.0, 0.0)

    @given(st.integers(0, 30))
    def test_balanced_motors(self, k):
        lay = BraitenbergParams().layout()
        spikes = np.concatenate([np.repeat(lay["motor_l"].start, k), np.repeat(lay["motor_r"].start, k)])
        assert decode_motors(spikes, 0.05, lay)[1] == 0.0

    def test_sign(self):
        lay = BraitenbergParams().layout()
        right = np.repeat(lay["motor_r"].start, 10)
        assert decode_motors(right, 0.1, lay)[1] > 0

    def test_window_positive(self):
        with pytest.raises(ValueError):
            decode_motors(np.zeros(0), 0.0, BraitenbergParams().layout())

    def test_population_rate(self):
        assert population_rate(np.array([0, 1, 1, 9]), range(0, 4), 0.5) == pytest.approx(1.5)


# ---------------------------------------------------------------- navigation network

@pytest.fixture(scope="module")
def nav_net():
    return build_braitenberg(NavigationParams().network)


def run_net(net, seed, rates, duration=0.5):
    chip = net.make_chip(seed)
    t, a = poisson_stream(np.random.default_rng(seed), rates, int(duration * 1e6)) if rates else (None, None)
    if t is None:
        st_, sn = chip.advance_arrays(int(duration * 1e6))
    else:
        st_, sn = chip.advance_arrays(int(duration * 1e6), t, a)
    return net.layout.counts(sn)


class TestBraitenberg:
    def test_no_events_drives_straight(self, nav_net):
        c = run_net(nav_net, 0, {})
        assert c["motor_l"] == 0 and c["motor_r"] == 0
        assert c["speed"] > 0

    def test_led_right_of_center(self, nav_net):
        col = 96 * nav_net.inputs.n_columns // nav_net.inputs.camera_width
        c = run_net(nav_net, 1, {nav_net.inputs.target_base + col: 400.0,
                                  nav_net.inputs.target_base + col + 1: 400.0})
        # target on the right drives the left wheel harder: a right turn (omega < 0)
        assert c["motor_l"] > c["motor_r"]
        v, w = decode_motors(np.concatenate([np.repeat(nav_net.layout["motor_l"].start, c["motor_l"]),
                                             np.repeat(nav_net.layout["motor_r"].start, c["motor_r"])]),
                             0.5, nav_net.layout)
        assert w < 0

    def test_obstacle_left_turns_right(self, nav_net):
        ob = nav_net.inputs.obstacle_base
        c = run_net(nav_net, 2, {ob + 26: 400.0, ob + 27: 400.0, ob + 28: 400.0})
        assert c["motor_l"] > c["motor_r"]

    def test_obstacle_inhibits_speed(self, nav_net):
        ob = nav_net.inputs.obstacle_base
        free = run_net(nav_net, 3, {})["speed"]
        blocked = run_net(nav_net, 3, {ob + c: 400.0 for c in range(20, 44)})["speed"]
        assert blocked < free

    def test_saccadic_suppression(self, nav_net):
        rng = np.random.default_rng(4)
        dur = 500_000
        tb = nav_net.inputs.target_base
        t, a = poisson_stream(rng, {tb + 30: 400.0, tb + 31: 400.0}, dur)
        w_max = NavigationParams().limits.omega_max
        g = np.sort(rng.integers(0, dur, rng.poisson(NavigationParams().gyro.k_gyro * w_max * 0.5)))
        t2 = np.concatenate([t, g])
        a2 = np.concatenate([a, np.full(g.size, nav_net.inputs.gyro, np.int64)])
        order = np.lexsort((a2, t2))
        quiet = nav_net.make_chip(5)
        turning = nav_net.make_chip(5)
        _, n0 = quiet.advance_arrays(dur, t, a)
        _, n1 = turning.advance_arrays(dur, t2[order], a2[order])
        t1 = nav_net.layout["target1"]
        count = lambda n: int(np.count_nonzero((n >= t1.start) & (n < t1.stop)))  # noqa: E731
        assert count(n1) < count(n0)


# ---------------------------------------------------------------- closed loop

class TestNavigationTrial:
    def test_zero_duration(self):
        res = run_navigation_trial(default_arena_suite()["empty"], 0, duration=0.0)
        assert res.trajectory.shape == (0, 7) and not res.reached

    def test_empty_arena_reached(self):
        res = run_navigation_trial(default_arena_suite()["empty"], 0)
        assert res.reached and res.collisions == 0
        assert res.time_to_target == pytest.approx(res.trajectory[-1, 0])

    def test_deterministic(self):
        arena = default_arena_suite()["three_obstacles"]
        a = run_navigation_trial(arena, 11, duration=3.0, keep_raster=True)
        b = run_navigation_trial(arena, 11, duration=3.0, keep_raster=True)
        assert np.array_equal(a.trajectory, b.trajectory)
        assert all(np.array_equal(x, y) for x, y in zip(a.raster, b.raster))

    def test_energy_follows_activity(self):
        suite = default_arena_suite()
        empty = run_navigation_trial(suite["empty"], 0, duration=2.0)
        busy = run_navigation_trial(suite["three_obstacles"], 0, duration=2.0)
        assert len(empty.trajectory) == len(busy.trajectory) == 200
        e_sop = NavigationParams().network.chip.energy_per_sop
        for res in (empty, busy):
            assert res.energy == pytest.approx(res.sop_count * e_sop, rel=1e-12)
        assert empty.energy < busy.energy

    def test_single_target_bump(self):
        params = NavigationParams()
        res = run_navigation_trial(default_arena_suite()["empty"], 2, duration=4.0, keep_raster=True)
        t, n = res.raster
        t2 = build_braitenberg(params.network).layout["target2"]
        win = int(params.window * 1e6)
        for start in range(0, int(t.max()) + 1, win):
            sel = n[(t >= start) & (t < start + win) & (n >= t2.start) & (n < t2.stop)] - t2.start
            counts = np.bincount(sel, minlength=len(t2)).astype(float)
            assert len(detect_peaks(np.convolve(counts, np.ones(3), "same") - 1.5)) <= 1

    def test_centered_obstacle_is_bypassed(self):
        from neuroloop.config import from_dict, load_config
        params = from_dict(NavigationParams, load_config("navigate_avoid")["navigate"]["params"])
        arena = default_arena_suite()["one_obstacle"]
        ob = arena.obstacles[0]
        net = build_braitenberg(params.network)
        successes = [r for r in (run_navigation_trial(arena, s, params=params, network=net) for s in range(4))
                     if r.reached]
        assert len(successes) >= 3
        for res in successes:
            d = np.hypot(res.trajectory[:, 1] - ob.x, res.trajectory[:, 2] - ob.y)
            assert d.min() > ob.r + params.limits.radius
            # the path leaves the straight start-target line to get round
            assert np.max(np.abs(res.trajectory[:, 2] - arena.start[1])) > ob.r


# ---------------------------------------------------------------- sequence network

@pytest.fixture(scope="module")
def seq_net():
    return build_sequence_network()


class TestSequenceNetwork:
    def test_fills_chip(self, seq_net):
        assert seq_net.layout.total == 256
        assert SequenceParams().layout().total == 5 * (16 + 16) + 64 + 16 + 16

    def test_overflow(self):
        with pytest.raises(LayoutError):
            build_sequence_network(SequenceParams(n_items=6))

    def test_initial_weights(self, seq_net):
        x = seq_net.plastic_matrix(seq_net.make_chip(0))
        assert x.shape == (5 * 16, 64) and np.all(x == 0)

    def _drive(self, seq_net, seed, ordinals, duration=0.6):
        chip = seq_net.make_chip(seed)
        rng = np.random.default_rng(seed)
        t, a = poisson_stream(rng, {seq_net.inputs.ordinal(i): 300.0 for i in ordinals}, 50_000)
        chip.advance_arrays(50_000, t, a)
        st_, sn = chip.advance_arrays(int(duration * 1e6))
        late = sn[st_ >= int((duration - 0.2) * 1e6)]
        return seq_net.layout.counts(late)

    def test_untrained_ordinal_gives_no_content(self, seq_net):
        c = self._drive(seq_net, 0, [1])
        assert c["ordinal1"] > 0
        assert c["content"] == 0

    @pytest.mark.parametrize("seed", range(3))
    def test_ordinal_exclusivity(self, seq_net, seed):
        c = self._drive(seq_net, seed, [1, 2])
        active = [i for i in range(5) if c[f"ordinal{i}"] > 0]
        assert len(active) == 1


class TestSequenceExperiment:
    def test_empty_items(self, seq_net):
        res = run_sequence_experiment([], 0, network=seq_net)
        assert res.replay == [] and np.array_equal(res.x_before, res.x_after)

    def test_reference_sequence(self, seq_net):
        res = run_sequence_experiment([12, 40, 55], 0, network=seq_net)
        assert res.matches()
        assert learning_margin(res.x_after, res.items, 16) > 0.3

    def test_idle_gaps(self, seq_net):
        items = sample_items(1)
        res = run_sequence_experiment(items, 1, network=seq_net, protocol=ProtocolParams(gap=2.0))
        assert res.matches()

    def test_bad_items(self, seq_net):
        with pytest.raises(ParameterError):
            run_sequence_experiment([3, 3], network=seq_net)
        with pytest.raises(ParameterError):
            run_sequence_experiment([70], network=seq_net)
        with pytest.raises(ParameterError):
            run_sequence_experiment(list(range(0, 60, 10)), network=seq_net)

    @settings(max_examples=25)
    @given(st.integers(0, 10_000))
    def test_sample_items_spacing(self, seed):
        items = sample_items(seed)
        assert len(set(items)) == 3
        assert all(4 <= v < 60 for v in items)
        s = sorted(items)
        assert all(b - a >= 8 for a, b in zip(s, s[1:]))

    def test_margin_definition(self):
        x = np.zeros((32, 64))
        x[:16, 10:13] = 1.0
        x[16:, 40:45] = 1.0
        assert learning_margin(x, [11, 42], 16) == pytest.approx(3 / 5 - 0.0)
