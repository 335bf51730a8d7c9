"""ROLLS-like neuromorphic processor emulator."""

from .aer import INPUT, OUTPUT, AerEvent, read_aer, write_aer
from .config import ChipConfig, PlasticityParams, chip_config_from_dict, chip_config_to_dict
from .connectivity import (
    MAX_LEVEL,
    ConnectivityFragment,
    ConnectivityMatrix,
    quantize_level,
    read_connectivity,
    write_connectivity,
)
from .core import Chip, EnergyMeter, build_chip
from .energy import CHIP_TABLE, energy_report, energy_table
from .mismatch import MismatchModel

__all__ = [
    "AerEvent", "INPUT", "OUTPUT", "read_aer", "write_aer",
    "ChipConfig", "PlasticityParams", "chip_config_from_dict", "chip_config_to_dict",
    "MAX_LEVEL", "ConnectivityFragment", "ConnectivityMatrix", "quantize_level",
    "read_connectivity", "write_connectivity",
    "Chip", "EnergyMeter", "build_chip", "CHIP_TABLE", "energy_report", "energy_table",
    "MismatchModel",
]
