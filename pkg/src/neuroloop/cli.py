"""Command-line experiment runner.

Every subcommand reads one YAML config (a shipped default unless
``--config`` is given), writes the fully resolved config next to its
outputs, and emits CSV data plus optional SVG figures. Data files depend
only on the config and the seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from . import __version__
from .agents.navigation import NavigationParams, TRAJECTORY_HEADER, default_arena_suite, run_navigation_trial
from .agents.sequence import (ProtocolParams, SequenceParams, build_sequence_network, learning_margin,
                              run_sequence_experiment, sample_items)
from .agents.world import Arena, arena_from_dict, read_arena
from .chip import ChipConfig, read_aer, write_aer
from .chip.aer import events_to_arrays
from .chip.energy import energy_table
from .config import dump_config, from_dict, load_config, section
from .dynamics import DpiParams, DpiState, dpi_inject_spike, dpi_step_full, dpi_step_linear, time_constant
from .errors import ConfigError, NeuroloopError
from .fields.dnf import FieldParams, KernelParams, detect_peaks, gaussian_input, simulate_field
from .fields.experiments import WtaTrialParams, build_wta_chip, poisson_profile_events, run_wta_stream

SEED_ENV = "NEUROLOOP_SEED"
DEFAULT_CONFIGS = {
    "dpi": "dpi", "dnf": "dnf_selfsustain", "wta": "wta",
    "navigate": "navigate", "sequence": "sequence", "energy": "energy",
}


@dataclass
class RunContext:
    name: str
    cfg: dict[str, Any]
    out: Path
    seed: int
    jobs: int
    plots: bool

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p


# -- small output helpers -----------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ("nan" if math.isnan(v) else str(float(v)))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_summary(path: Path, data: Mapping[str, Any]) -> None:
    path.write_text(dump_config(data))


def _raster_rows(t_us: np.ndarray, idx: np.ndarray):
    return zip(np.asarray(t_us).tolist(), np.asarray(idx).tolist())


def _seed_list(cfg: Mapping[str, Any], base: int) -> list[int]:
    """``seeds: {count: N}`` or ``seeds: [..]`` relative to the base seed; default one seed."""
    spec = cfg.get("seeds")
    if spec is None:
        return [base]
    if isinstance(spec, Mapping):
        count = int(spec.get("count", 1))
        if count < 0:
            raise ConfigError("seeds.count", "must be >= 0")
        return [base + k for k in range(count)]
    if isinstance(spec, list):
        return [base + int(s) for s in spec]
    raise ConfigError("seeds", "expected {count: N} or a list of offsets")


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# -- dpi ------------------------------------------------------------------------------


def cmd_dpi(ctx: RunContext) -> None:
    d = section(ctx.cfg, "dpi")
    p = from_dict(DpiParams, d.get("synapse", {}), "dpi.synapse")
    tau = time_constant(p)
    step = section(d, "step", "dpi.step")
    dt = float(step.get("dt", tau / 200))
    dur = float(step.get("duration", 10 * tau))
    onset = float(step.get("onset", 0.0))
    i_in = float(step.get("i_in_ratio", 100.0)) * p.leak_current
    n = int(round(dur / dt))
    t = np.arange(n + 1) * dt
    full = np.zeros(n + 1)
    lin = np.zeros(n + 1)
    sf, sl = DpiState(), DpiState()
    for k in range(n):
        drive = i_in if t[k] >= onset - 1e-15 else 0.0
        sf = dpi_step_full(sf, p, drive, dt)
        sl = dpi_step_linear(sl, p, drive, dt)
        full[k + 1], lin[k + 1] = sf.i_out, sl.i_out
    i_ss = p.gain * i_in
    analytic = np.where(t >= onset, i_ss * (1 - np.exp(-np.clip(t - onset, 0, None) / tau)), 0.0)
    write_csv(ctx.path("step.csv"), ["t", "full", "linear"], zip(t, full, lin))
    write_csv(ctx.path("step_analytic.csv"), ["t", "analytic"], zip(t, analytic))

    spk = section(d, "spikes", "dpi.spikes")
    sdt = float(spk.get("dt", dt))
    sdur = float(spk.get("duration", 10 * tau))
    rate = float(spk.get("rate", 50.0))
    weight = float(spk.get("weight", 1.0))
    unit = float(spk.get("unit_current", 10e-12))
    rng = np.random.default_rng(ctx.seed)
    n_s = int(round(sdur / sdt))
    spikes = np.sort(rng.uniform(0.0, sdur, rng.poisson(rate * sdur))) if rate > 0 else np.zeros(0)
    step_idx = np.minimum(np.floor(spikes / sdt + 1e-9).astype(int), n_s)
    per_step = np.bincount(step_idx, minlength=n_s + 1)
    ts = np.arange(n_s + 1) * sdt
    sf, sl = DpiState(), DpiState()
    f_tr, l_tr = np.zeros(n_s + 1), np.zeros(n_s + 1)
    for k in range(n_s + 1):
        for _ in range(per_step[k]):
            sf = dpi_inject_spike(sf, p, weight, unit)
            sl = dpi_inject_spike(sl, p, weight, unit)
        f_tr[k], l_tr[k] = sf.i_out, sl.i_out
        if k < n_s:
            sf = dpi_step_full(sf, p, 0.0, sdt)
            sl = dpi_step_linear(sl, p, 0.0, sdt)
    jump = weight * p.gain * unit
    kick = step_idx * sdt
    ana = np.zeros(n_s + 1)
    for tk in kick:
        m = ts >= tk - 1e-15
        ana[m] += jump * np.exp(-(ts[m] - tk) / tau)
    write_csv(ctx.path("spikes.csv"), ["t", "full", "linear"], zip(ts, f_tr, l_tr))
    write_csv(ctx.path("spikes_analytic.csv"), ["t", "analytic"], zip(ts, ana))
    write_csv(ctx.path("spikes_input.csv"), ["t"], ((v,) for v in kick))
    k10 = int(np.searchsorted(t, onset + 10 * tau - 1e-12))
    rel10 = float(abs(full[k10] - lin[k10]) / lin[k10]) if k10 <= n and i_ss > 0 else float("nan")
    rel_end = float(abs(full[-1] - lin[-1]) / lin[-1]) if i_ss > 0 else float("nan")
    write_summary(ctx.path("summary.yaml"), {
        "tau": tau, "i_in": i_in, "linear_steady_state": i_ss, "full_final": float(full[-1]),
        "linear_final": float(lin[-1]), "rel_diff_at_10tau": rel10, "rel_diff_final": rel_end,
        "n_spikes": int(kick.size),
    })
    if ctx.plots:
        from . import plots
        plots.traces(ctx.path("step.svg"), t, {"full": full, "linear": lin, "analytic": analytic}, "I_out (A)")
        plots.traces(ctx.path("spikes.svg"), ts, {"full": f_tr, "linear": l_tr, "analytic": ana}, "I_out (A)")


# -- dnf ------------------------------------------------------------------------------


def cmd_dnf(ctx: RunContext) -> None:
    d = section(ctx.cfg, "dnf")
    p = from_dict(FieldParams, d.get("field", {}), "dnf.field")
    k = from_dict(KernelParams, d.get("kernel", {}), "dnf.kernel")
    stim = section(d, "stimulus", "dnf.stimulus")
    dt = float(d.get("dt_tau", 0.05)) * p.tau
    record = int(d.get("record_every", 20))
    inp = gaussian_input(p, float(stim.get("center", p.n / 2)), float(stim.get("amplitude", 8.0)),
                         float(stim.get("width", 2.0)))
    t_on = float(stim.get("duration_tau", 2.0)) * p.tau
    s, tr1 = simulate_field(p, k, inp, t_on, dt, record_every=record)
    t_free = float(d.get("run_tau", 100.0)) * p.tau
    n5 = int(round(5 * p.tau / dt))
    s5, tr2 = simulate_field(p, k, 0.0, n5 * dt, dt, state=s, record_every=record)
    s_end, tr3 = simulate_field(p, k, 0.0, max(0.0, t_free - n5 * dt), dt, state=s5, record_every=record)
    states = tr1 + tr2[1:] + tr3[1:]
    write_csv(ctx.path("trajectory.csv"), ["t"] + [f"u_{i}" for i in range(p.n)],
              ([round(st.t, 12)] + st.u.tolist() for st in states))
    peaks = detect_peaks(s_end, 0.0)
    write_summary(ctx.path("summary.yaml"), {
        "tau": p.tau, "h": p.h, "stimulus_off_at": t_on, "run_after_removal": t_free,
        "max_deviation_from_h_after_5tau": float(np.max(np.abs(s5.u - p.h))),
        "bump_at_end": bool(peaks), "peak_positions": [pk.position for pk in peaks],
        "max_activation_at_end": float(s_end.u.max()),
    })
    if ctx.plots:
        from . import plots
        plots.field_heatmap(ctx.path("trajectory.svg"), np.array([st.t for st in states]),
                            np.array([st.u for st in states]), p.h)


# -- wta ------------------------------------------------------------------------------


def _wta_job(args):
    chip_cfg, params, seed, stream = args
    return run_wta_stream(chip_cfg, params, seed, **stream)


def cmd_wta(ctx: RunContext) -> None:
    chip_cfg = from_dict(ChipConfig, ctx.cfg.get("chip"), "chip")
    w = section(ctx.cfg, "wta")
    params = from_dict(WtaTrialParams, w.get("trial", {}), "wta.trial")
    stream = section(w, "stream", "wta.stream")
    allowed = {"loc_a", "loc_b", "rate_a", "rate_b", "background_rate"}
    bad = set(stream) - allowed
    if bad:
        raise ConfigError(f"wta.stream.{sorted(bad)[0]}", "unknown field")
    stream.setdefault("loc_a", params.spec.n_exc // 3)
    stream.setdefault("loc_b", 2 * params.spec.n_exc // 3)
    seeds = _seed_list(w, ctx.seed)
    results = _map(_wta_job, [(chip_cfg, params, s, stream) for s in seeds], ctx.jobs)
    results.sort(key=lambda r: r.seed)
    rows = []
    for r in results:
        write_csv(ctx.path(f"seed{r.seed}_input_raster.csv"), ["t_us", "address"], _raster_rows(*r.input_events))
        write_csv(ctx.path(f"seed{r.seed}_output_raster.csv"), ["t_us", "neuron"], _raster_rows(*r.output_events))
        rows.append((r.seed, r.loc_a, r.loc_b, r.spiking_winner, r.field_winner,
                     r.spiking_winner == r.field_winner, r.input_var, r.output_var,
                     r.output_var < r.input_var, r.sop_count, r.energy))
        if ctx.plots:
            from . import plots
            plots.raster(ctx.path(f"seed{r.seed}_input_raster.svg"), *r.input_events, "input address")
            plots.raster(ctx.path(f"seed{r.seed}_output_raster.svg"), *r.output_events)
    write_csv(ctx.path("summary.csv"),
              ["seed", "loc_a", "loc_b", "spiking_winner", "field_winner", "agree", "input_var",
               "output_var", "variance_reduced", "sop_count", "energy"], rows)


# -- navigate -------------------------------------------------------------------------


def _arenas(spec, base_dir: Path | None) -> list[Arena]:
    suite = default_arena_suite()
    if spec is None:
        return list(suite.values())
    out = []
    for i, item in enumerate(spec):
        where = f"navigate.arenas[{i}]"
        if isinstance(item, Mapping):
            out.append(arena_from_dict(item, where))
        elif isinstance(item, str) and item in suite:
            out.append(suite[item])
        elif isinstance(item, str):
            path = Path(item)
            if not path.is_absolute() and base_dir is not None and not path.exists():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(where, f"unknown arena {item!r}")
            out.append(read_arena(path))
        else:
            raise ConfigError(where, "expected an arena name, file or mapping")
    return out


def _nav_job(args):
    arena, seed, params, keep = args
    return run_navigation_trial(arena, seed, params=params, keep_raster=keep)


def cmd_navigate(ctx: RunContext) -> None:
    nv = section(ctx.cfg, "navigate")
    params = from_dict(NavigationParams, nv.get("params", {}), "navigate.params")
    if "chip" in ctx.cfg:
        chip_cfg = from_dict(ChipConfig, ctx.cfg["chip"], "chip")
        params = _replace_chip(params, chip_cfg)
    base_dir = Path(ctx.cfg["_config_dir"]) if "_config_dir" in ctx.cfg else None
    arenas = _arenas(nv.get("arenas"), base_dir)
    seeds = _seed_list(nv, ctx.seed)
    keep = bool(nv.get("rasters", False))
    jobs = [(a, s, params, keep) for a in arenas for s in seeds]
    results = _map(_nav_job, jobs, ctx.jobs)
    order = {a.name: i for i, a in enumerate(arenas)}
    paired = sorted(zip(jobs, results), key=lambda jr: (order[jr[0][0].name], jr[1].seed))
    rows = []
    for (arena, _, _, _), r in paired:
        stem = f"trajectories/{arena.name}_seed{r.seed}"
        write_csv(ctx.path(f"{stem}.csv"), TRAJECTORY_HEADER.split(","),
                  ([row[0], row[1], row[2], row[3], row[4], row[5], int(row[6])] for row in r.trajectory))
        if keep:
            write_csv(ctx.path(f"rasters/{arena.name}_seed{r.seed}.csv"), ["t_us", "neuron"], _raster_rows(*r.raster))
        if ctx.plots:
            from . import plots
            plots.trajectory(ctx.path(f"{stem}.svg"), arena, r.trajectory, f"{arena.name} seed {r.seed}: {r.outcome}")
        rows.append((arena.name, r.seed, r.outcome, r.reached, r.collisions, r.time_to_target,
                     float(r.trajectory[-1, 0]) if r.trajectory.size else 0.0, r.sop_count, r.energy))
    write_csv(ctx.path("trials.csv"),
              ["arena", "seed", "outcome", "reached", "collisions", "time_to_target", "duration",
               "sop_count", "energy"], rows)
    agg = []
    for arena in arenas:
        mine = [row for row in rows if row[0] == arena.name]
        if not mine:
            continue
        ok = [row for row in mine if row[3]]
        agg.append((arena.name, len(mine), len(ok) / len(mine),
                    float(np.mean([row[5] for row in ok])) if ok else float("nan"),
                    sum(row[4] for row in mine), sum(row[4] for row in ok),
                    float(np.mean([row[8] for row in mine]))))
    write_csv(ctx.path("summary.csv"),
              ["arena", "trials", "success_rate", "mean_time_to_target", "collisions",
               "collisions_among_successes", "mean_energy"], agg)


def _replace_chip(params: NavigationParams, chip_cfg: ChipConfig) -> NavigationParams:
    return replace(params, network=replace(params.network, chip=chip_cfg))


# -- sequence -------------------------------------------------------------------------


def _seq_job(args):
    items, seed, params, protocol = args
    if items is None:
        items = sample_items(seed, 3, params.n_locations)
    return items, run_sequence_experiment(items, seed, params, protocol)


def cmd_sequence(ctx: RunContext) -> None:
    sq = section(ctx.cfg, "sequence")
    params = from_dict(SequenceParams, sq.get("params", {}), "sequence.params")
    if "chip" in ctx.cfg:
        params = replace(params, chip=from_dict(ChipConfig, ctx.cfg["chip"], "chip"))
    protocol = from_dict(ProtocolParams, sq.get("protocol", {}), "sequence.protocol")
    fixed = sq.get("items")
    items_cfg = None if fixed is None else [int(v) for v in fixed]
    seeds = _seed_list(sq, ctx.seed)
    net = build_sequence_network(params)
    results = _map(_seq_job, [(items_cfg, s, params, protocol) for s in seeds], ctx.jobs)
    rows = []
    for seed, (items, r) in sorted(zip(seeds, results), key=lambda p: p[0]):
        write_csv(ctx.path(f"seed{seed}_raster.csv"), ["t_us", "neuron"], _raster_rows(*r.raster))
        x = r.x_after
        write_csv(ctx.path(f"seed{seed}_plastic_x.csv"), ["row"] + [f"loc_{j}" for j in range(x.shape[1])],
                  ([i] + x[i].tolist() for i in range(x.shape[0])))
        margin = learning_margin(x, items, params.group_size)
        rows.append((seed, " ".join(map(str, items)), " ".join(map(str, r.replay)), r.matches(),
                     margin, r.sop_count, r.energy))
        if ctx.plots:
            from . import plots
            plots.raster(ctx.path(f"seed{seed}_raster.svg"), *r.raster,
                         bands={name: net.layout[name] for name in net.layout})
            plots.heatmap(ctx.path(f"seed{seed}_plastic_x.svg"), x, "content location", "ordinal neuron", "X")
    write_csv(ctx.path("summary.csv"),
              ["seed", "items", "replay", "match", "margin", "sop_count", "energy"], rows)


# -- energy ---------------------------------------------------------------------------


def cmd_energy(ctx: RunContext) -> None:
    e = section(ctx.cfg, "energy")
    chip_cfg = from_dict(ChipConfig, ctx.cfg.get("chip"), "chip")
    params = from_dict(WtaTrialParams, e.get("network", {}), "energy.network")
    stream = e.get("stream")
    if stream:
        path = Path(stream)
        if not path.is_absolute() and not path.exists() and "_config_dir" in ctx.cfg:
            path = Path(ctx.cfg["_config_dir"]) / path
        times, addrs = events_to_arrays(read_aer(path))
    else:
        gen = section(e, "generate", "energy.generate")
        rate = float(gen.get("rate", 20.0))
        dur = float(gen.get("duration", 1.0))
        rng = np.random.default_rng(ctx.seed)
        times, addrs = poisson_profile_events(np.full(params.spec.n_exc, rate), 0.0, dur, rng)
    write_aer(ctx.path("input_stream.csv"), (times, addrs))
    chip, _ = build_wta_chip(chip_cfg, params.spec, params.input_level, ctx.seed)
    until = int(times[-1]) + 1 if times.size else 0
    until = max(until, int(round(float(e.get("tail", 0.0)) * 1e6)) + until)
    st, sn = chip.advance_arrays(until, times, addrs)
    sops = chip.energy_report()["sop_count"]
    rows = [(r["name"], r["energy_per_sop"], r["sop_count"], r["total_energy"]) for r in energy_table(sops)]
    write_csv(ctx.path("energy.csv"), ["chip", "energy_per_sop", "sop_count", "total_energy"], rows)
    write_csv(ctx.path("output_raster.csv"), ["t_us", "neuron"], _raster_rows(st, sn))
    write_summary(ctx.path("summary.yaml"), {"input_events": int(times.size), "output_spikes": int(st.size),
                                             "sop_count": int(sops)})
    if ctx.plots:
        from . import plots
        plots.bars(ctx.path("energy.svg"), [r[0] for r in rows], [max(r[3], 1e-30) for r in rows], "energy (J)")


COMMANDS: dict[str, Callable[[RunContext], None]] = {
    "dpi": cmd_dpi, "dnf": cmd_dnf, "wta": cmd_wta,
    "navigate": cmd_navigate, "sequence": cmd_sequence, "energy": cmd_energy,
}


def resolve_seed(flag: int | None, cfg: Mapping[str, Any]) -> int:
    """``--seed`` wins, then ``NEUROLOOP_SEED``, then the config's ``seed``, then 0."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env!r}") from None
    return int(cfg.get("seed", 0))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="neuroloop", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"neuroloop {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help=f"YAML config (default: shipped '{DEFAULT_CONFIGS[name]}')")
        sp.add_argument("--out", help="output directory (default: ./neuroloop_out/<command>)")
        sp.add_argument("--seed", type=int, help=f"base seed (fallback: ${SEED_ENV}, then config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for seed batches")
        sp.add_argument("--no-plots", action="store_true", help="skip SVG figures")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        source = args.config or DEFAULT_CONFIGS[args.command]
        cfg = load_config(source)
        if args.config:
            cfg["_config_dir"] = str(Path(args.config).resolve().parent)
        seed = resolve_seed(args.seed, cfg)
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        out = Path(args.out or Path("neuroloop_out") / args.command)
        out.mkdir(parents=True, exist_ok=True)
        resolved = {k: v for k, v in cfg.items() if not k.startswith("_")}
        resolved["seed"] = seed
        (out / "config.yaml").write_text(dump_config(resolved))
        ctx = RunContext(args.command, cfg, out, seed, args.jobs, not args.no_plots)
        COMMANDS[args.command](ctx)
    except (NeuroloopError, OSError) as exc:
        print(f"neuroloop {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(f"neuroloop {args.command}: wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
