"""Seeded multiplicative device mismatch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import lognormal_sigma


@dataclass(frozen=True)
class MismatchModel:
    """Lognormal factors (mean 1, coefficient of variation ``cv``).

    Time constants and thresholds vary per neuron; unit weights vary per
    synapse. ``cv == 0`` yields factors of exactly 1.
    """

    tau_mem: np.ndarray
    tau_exc: np.ndarray
    tau_inh: np.ndarray
    tau_plastic: np.ndarray
    threshold: np.ndarray
    weight: np.ndarray

    @classmethod
    def sample(cls, cv: float, seed: int, n_neurons: int, n_cols: int) -> "MismatchModel":
        if cv == 0:
            ones = np.ones(n_neurons)
            return cls(ones, ones.copy(), ones.copy(), ones.copy(), ones.copy(), np.ones((n_neurons, n_cols)))
        rng = np.random.default_rng(seed)
        sigma = lognormal_sigma(cv)

        def draw(shape):
            return np.exp(sigma * rng.standard_normal(shape) - 0.5 * sigma * sigma)

        return cls(
            tau_mem=draw(n_neurons),
            tau_exc=draw(n_neurons),
            tau_inh=draw(n_neurons),
            tau_plastic=draw(n_neurons),
            threshold=draw(n_neurons),
            weight=draw((n_neurons, n_cols)),
        )
