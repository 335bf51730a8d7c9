"""Energy accounting against published energy-per-SOP figures."""

from __future__ import annotations

import csv
from importlib import resources

from .core import Chip


def _load_table() -> list[dict]:
    text = resources.files("neuroloop.data").joinpath("chip_comparison.csv").read_text()
    rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    out = []
    for row in rows:
        e = row["energy_per_sop"].strip()
        row["energy_per_sop"] = float(e) if e else None
        row["neurons_per_core"] = int(row["neurons_per_core"])
        out.append(row)
    return out


CHIP_TABLE: list[dict] = _load_table()


def energy_report(chip: Chip) -> dict:
    return chip.energy_report()


def energy_table(sop_count: int) -> list[dict]:
    """Energy of ``sop_count`` operations under every chip that reports a per-SOP figure."""
    return [
        {"name": row["name"], "energy_per_sop": row["energy_per_sop"],
         "sop_count": sop_count, "total_energy": sop_count * row["energy_per_sop"]}
        for row in CHIP_TABLE
        if row["energy_per_sop"] is not None
    ]
