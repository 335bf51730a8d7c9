"""Dynamic neural fields and their winner-take-all realization on the chip."""

from .dnf import (
    PERIODIC,
    ZERO_PADDED,
    FieldParams,
    FieldState,
    KernelParams,
    Peak,
    detect_peaks,
    field_step,
    gaussian_input,
    lateral_input,
    mexican_hat,
    sigmoid,
    simulate_field,
    write_trajectory_csv,
)
from .wta import WtaLayout, WtaSpec, compile_wta, exc_matrix, lateral_levels

__all__ = [
    "PERIODIC", "ZERO_PADDED", "FieldParams", "FieldState", "KernelParams", "Peak", "detect_peaks",
    "field_step", "gaussian_input", "lateral_input", "mexican_hat", "sigmoid", "simulate_field",
    "write_trajectory_csv", "WtaLayout", "WtaSpec", "compile_wta", "exc_matrix", "lateral_levels",
]
