import csv
import filecmp
from pathlib import Path

import pytest
import yaml

from neuroloop.cli import main
from neuroloop.chip.config import ROLLS_ENERGY_PER_SOP

TINY = {
    "dpi": "include: dpi\n",
    "dnf": "include: dnf_selfsustain\ndnf: {run_tau: 10}\n",
    "wta": "include: wta\nwta: {seeds: {count: 2}}\n",
    "navigate": "include: navigate\nnavigate: {seeds: {count: 2}, arenas: [empty, three_obstacles],"
                " params: {duration: 2.0}}\n",
    "sequence": "include: sequence\nsequence: {seeds: {count: 1}, items: [12, 40]}\n",
    "energy": "include: energy\nenergy: {generate: {rate: 10.0, duration: 0.3}}\n",
}


def run(tmp_path, cmd, out, *extra):
    cfg = tmp_path / f"{cmd}.yaml"
    cfg.write_text(TINY[cmd])
    return main([cmd, "--config", str(cfg), "--out", str(out), *extra])


def csv_files(d: Path):
    return sorted(p.relative_to(d) for p in d.rglob("*.csv"))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("cmd", sorted(TINY))
def test_rerun_is_byte_identical(tmp_path, cmd):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(tmp_path, cmd, a, "--no-plots", "--seed", "4") == 0
    assert run(tmp_path, cmd, b, "--no-plots", "--seed", "4") == 0
    files = csv_files(a)
    assert files and files == csv_files(b)
    match, mismatch, errors = filecmp.cmpfiles(a, b, [str(f) for f in files], shallow=False)
    assert not mismatch and not errors
    assert (a / "config.yaml").read_text() == (b / "config.yaml").read_text()


def test_plots_written(tmp_path):
    assert run(tmp_path, "dnf", tmp_path / "o") == 0
    assert list((tmp_path / "o").glob("*.svg"))


def test_seed_changes_output(tmp_path):
    run(tmp_path, "energy", tmp_path / "a", "--no-plots", "--seed", "1")
    run(tmp_path, "energy", tmp_path / "b", "--no-plots", "--seed", "2")
    assert (tmp_path / "a" / "input_stream.csv").read_text() != (tmp_path / "b" / "input_stream.csv").read_text()


def test_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("NEUROLOOP_SEED", "13")
    assert run(tmp_path, "energy", tmp_path / "o", "--no-plots") == 0
    assert yaml.safe_load((tmp_path / "o" / "config.yaml").read_text())["seed"] == 13


def test_navigate_rows(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "navigate", out, "--no-plots", "--jobs", "2") == 0
    trials = read_rows(out / "trials.csv")
    assert len(trials) == 4
    assert [(r["arena"], r["seed"]) for r in trials] == [
        ("empty", "0"), ("empty", "1"), ("three_obstacles", "0"), ("three_obstacles", "1")]
    for r in trials:
        assert float(r["energy"]) == pytest.approx(int(r["sop_count"]) * ROLLS_ENERGY_PER_SOP, rel=1e-12)
    traj = (out / "trajectories" / "empty_seed0.csv").read_text().splitlines()
    assert traj[0] == "t,x,y,theta,v,omega,collision_flag"


def test_jobs_do_not_change_results(tmp_path):
    run(tmp_path, "wta", tmp_path / "a", "--no-plots", "--jobs", "1")
    run(tmp_path, "wta", tmp_path / "b", "--no-plots", "--jobs", "2")
    assert (tmp_path / "a" / "summary.csv").read_text() == (tmp_path / "b" / "summary.csv").read_text()


def test_energy_matches_sops(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "energy", out, "--no-plots") == 0
    for r in read_rows(out / "energy.csv"):
        if r["energy_per_sop"]:
            assert float(r["total_energy"]) == pytest.approx(
                float(r["energy_per_sop"]) * int(r["sop_count"]), rel=1e-12)


def test_silent_stream_costs_nothing(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    cfg = tmp_path / "e.yaml"
    cfg.write_text("include: energy\nenergy: {stream: empty.csv, tail: 10.0}\n")
    out = tmp_path / "o"
    assert main(["energy", "--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    summary = yaml.safe_load((out / "summary.yaml").read_text())
    assert summary["sop_count"] == 0 and summary["output_spikes"] == 0
    assert all(float(r["total_energy"]) == 0.0 for r in read_rows(out / "energy.csv") if r["total_energy"])


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("include: dnf_selfsustain\ndnf: {field: {tua: 1}}\n")
    assert main(["dnf", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "dnf.field.tua" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["dpi", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "o")]) == 2


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["fly"])
