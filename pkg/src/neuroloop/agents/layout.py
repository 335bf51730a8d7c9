"""Named neuron populations laid out as contiguous index ranges."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from ..errors import LayoutError


@dataclass(frozen=True)
class NetworkLayout:
    populations: Mapping[str, range]
    n_neurons: int = 256

    def __post_init__(self):
        taken = np.zeros(self.n_neurons, dtype=bool)
        for name, rng in self.populations.items():
            if rng.step != 1 or len(rng) == 0:
                raise LayoutError(f"population {name!r} must be a non-empty contiguous range")
            if rng.start < 0 or rng.stop > self.n_neurons:
                raise LayoutError(
                    f"population {name!r} spans {rng.start}..{rng.stop - 1}, "
                    f"beyond the {self.n_neurons} available neurons"
                )
            if taken[rng.start:rng.stop].any():
                raise LayoutError(f"population {name!r} overlaps another population")
            taken[rng.start:rng.stop] = True

    @classmethod
    def pack(cls, sizes: Mapping[str, int], n_neurons: int = 256) -> "NetworkLayout":
        """Allocate populations back to back in the given order."""
        total = sum(int(s) for s in sizes.values())
        if total > n_neurons:
            raise LayoutError(f"populations need {total} neurons; chip has {n_neurons} (overflow {total - n_neurons})")
        pops, start = {}, 0
        for name, size in sizes.items():
            pops[name] = range(start, start + int(size))
            start += int(size)
        return cls(pops, n_neurons)

    def __getitem__(self, name: str) -> range:
        try:
            return self.populations[name]
        except KeyError:
            raise LayoutError(f"no population named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.populations

    def __iter__(self) -> Iterator[str]:
        return iter(self.populations)

    @property
    def total(self) -> int:
        return sum(len(r) for r in self.populations.values())

    def labels(self) -> np.ndarray:
        """Population index per neuron (-1 where unallocated), in insertion order."""
        out = np.full(self.n_neurons, -1, dtype=np.int64)
        for k, rng in enumerate(self.populations.values()):
            out[rng.start:rng.stop] = k
        return out

    def counts(self, neurons: np.ndarray) -> dict[str, int]:
        """Spike counts per population for an array of neuron indices."""
        lab = self.labels()[np.asarray(neurons, dtype=np.int64)]
        per = np.bincount(lab[lab >= 0], minlength=len(self.populations))
        return {name: int(c) for name, c in zip(self.populations, per)}
