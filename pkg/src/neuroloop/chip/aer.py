"""Address events and the plain-text AER stream format.

Files hold one ``timestamp_us,address`` pair per line; ``#`` starts a
comment. Timestamps must be non-decreasing.
"""

from __future__ import annotations

import os
from typing import Iterable, NamedTuple

import numpy as np

from ..errors import StreamError

INPUT = "input"
OUTPUT = "output"


class AerEvent(NamedTuple):
    timestamp: int
    address: int
    kind: str = INPUT


def events_to_arrays(events: Iterable[AerEvent] | tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Normalize an event iterable (or a ``(times, addresses)`` pair) to int64 arrays."""
    if isinstance(events, tuple) and len(events) == 2 and isinstance(events[0], np.ndarray):
        times, addrs = events
        return np.asarray(times, dtype=np.int64), np.asarray(addrs, dtype=np.int64)
    events = list(events)
    if not events:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    times = np.fromiter((e[0] for e in events), dtype=np.int64, count=len(events))
    addrs = np.fromiter((e[1] for e in events), dtype=np.int64, count=len(events))
    return times, addrs


def check_sorted(times: np.ndarray) -> None:
    if times.size > 1 and np.any(np.diff(times) < 0):
        i = int(np.argmax(np.diff(times) < 0))
        raise StreamError(f"events not sorted: timestamp {times[i + 1]} follows {times[i]}")


def read_aer(path: str | os.PathLike, kind: str = INPUT) -> list[AerEvent]:
    events = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise StreamError(f"{path}:{lineno}: expected 'timestamp_us,address'")
            try:
                ts, addr = int(parts[0]), int(parts[1])
            except ValueError:
                raise StreamError(f"{path}:{lineno}: non-integer field") from None
            if ts < 0 or addr < 0:
                raise StreamError(f"{path}:{lineno}: negative value")
            if events and ts < events[-1].timestamp:
                raise StreamError(f"{path}:{lineno}: timestamp {ts} decreases")
            events.append(AerEvent(ts, addr, kind))
    return events


def write_aer(path: str | os.PathLike, events: Iterable[AerEvent] | tuple[np.ndarray, np.ndarray], header: str | None = None) -> None:
    times, addrs = events_to_arrays(events)
    check_sorted(times)
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for t, a in zip(times.tolist(), addrs.tolist()):
            fh.write(f"{t},{a}\n")
