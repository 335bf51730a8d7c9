"""Chip configuration records and validation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping

from ..dynamics import DpiParams, NeuronParams, UNIT_CURRENT
from ..errors import ConfigError, ParameterError

ROLLS_ENERGY_PER_SOP = 77e-15


@dataclass(frozen=True)
class PlasticityParams:
    """Calcium-gated bistable stop-learning rule.

    ``X`` is the internal synapse variable in [0, 1]; the synapse transmits
    ``w_high`` when ``X >= 0.5`` and ``w_low`` otherwise.
    """

    a: float = 0.1
    b: float = 0.1
    drift_rate: float = 0.5
    calcium_tau: float = 0.05
    calcium_jump: float = 1.0
    theta_up_low: float = 2.0
    theta_up_high: float = 14.0
    theta_down_low: float = 0.2
    theta_down_high: float = 1.5
    membrane_theta: float = 4e-12
    w_low: float = 0.0
    w_high: float = 1.0


@dataclass(frozen=True)
class ChipConfig:
    n_neurons: int = 256
    n_plastic_cols: int = 256
    n_static_cols: int = 256
    n_inputs: int = 512
    dt: float = 1e-4
    mismatch_cv: float = 0.10
    seed: int = 0
    energy_per_sop: float = ROLLS_ENERGY_PER_SOP
    unit_current: float = UNIT_CURRENT
    neuron: NeuronParams = NeuronParams()
    exc_synapse: DpiParams = DpiParams()
    inh_synapse: DpiParams = DpiParams()
    plasticity: PlasticityParams = PlasticityParams()

    def __post_init__(self):
        validate_chip_config(self)

    @property
    def n_cols(self) -> int:
        return self.n_plastic_cols + self.n_static_cols

    @property
    def dt_us(self) -> int:
        return int(round(self.dt * 1e6))

    def replace(self, **changes) -> "ChipConfig":
        return dataclasses.replace(self, **changes)


def validate_chip_config(cfg: ChipConfig) -> None:
    for name in ("n_neurons", "n_inputs"):
        if int(getattr(cfg, name)) < 1:
            raise ConfigError(f"chip.{name}", "must be >= 1")
    for name in ("n_plastic_cols", "n_static_cols"):
        if int(getattr(cfg, name)) < 0:
            raise ConfigError(f"chip.{name}", "must be >= 0")
    if cfg.n_cols < 1:
        raise ConfigError("chip.n_plastic_cols", "chip needs at least one synapse column")
    if not cfg.dt > 0:
        raise ConfigError("chip.dt", "must be > 0")
    if abs(cfg.dt * 1e6 - round(cfg.dt * 1e6)) > 1e-6 or round(cfg.dt * 1e6) < 1:
        raise ConfigError("chip.dt", "must be a whole number of microseconds")
    if not 0 <= cfg.mismatch_cv <= 0.5:
        raise ConfigError("chip.mismatch_cv", f"must lie in [0, 0.5], got {cfg.mismatch_cv}")
    if not cfg.energy_per_sop >= 0:
        raise ConfigError("chip.energy_per_sop", "must be >= 0")
    if not cfg.unit_current > 0:
        raise ConfigError("chip.unit_current", "must be > 0")
    p = cfg.plasticity
    for name in ("a", "b", "drift_rate", "calcium_jump"):
        if not getattr(p, name) >= 0:
            raise ConfigError(f"chip.plasticity.{name}", "must be >= 0")
    if not p.calcium_tau > 0:
        raise ConfigError("chip.plasticity.calcium_tau", "must be > 0")
    if not 0 <= p.w_low < p.w_high:
        raise ConfigError("chip.plasticity.w_low", "need 0 <= w_low < w_high")
    if p.theta_up_low > p.theta_up_high:
        raise ConfigError("chip.plasticity.theta_up_low", "band is empty")
    if p.theta_down_low > p.theta_down_high:
        raise ConfigError("chip.plasticity.theta_down_low", "band is empty")
    overlap = min(p.theta_up_high, p.theta_down_high) - max(p.theta_up_low, p.theta_down_low)
    if overlap > 0:
        raise ConfigError("chip.plasticity.theta_down_high", "potentiation and depression bands overlap")


_NESTED = {
    "neuron": NeuronParams,
    "exc_synapse": DpiParams,
    "inh_synapse": DpiParams,
    "plasticity": PlasticityParams,
}


def _dpi_from_mapping(data: Mapping[str, Any], path: str) -> DpiParams:
    data = dict(data)
    try:
        if "tau" in data:
            tau = float(data.pop("tau"))
            gain = float(data.pop("gain", 1.0))
            return DpiParams.from_tau(tau, gain, **data)
        return DpiParams(**data)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None
    except ParameterError as exc:
        raise ConfigError(path, str(exc)) from None


def _build(cls, data: Mapping[str, Any], path: str):
    if not isinstance(data, Mapping):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}", "unknown field")
        sub = f"{path}.{key}"
        if cls is ChipConfig and key in _NESTED:
            target = _NESTED[key]
            if target is DpiParams:
                value = _dpi_from_mapping(value, sub)
            else:
                value = _build(target, value, sub)
        elif cls is NeuronParams and key == "membrane":
            value = _dpi_from_mapping(value, sub)
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def chip_config_from_dict(data: Mapping[str, Any] | None, path: str = "chip") -> ChipConfig:
    """Build a validated :class:`ChipConfig` from plain nested mappings.

    DPI sections accept either raw circuit values or ``tau``/``gain`` shorthands.
    """
    return _build(ChipConfig, data or {}, path)


def chip_config_to_dict(cfg: ChipConfig) -> dict[str, Any]:
    out = dataclasses.asdict(cfg)
    for key in ("exc_synapse", "inh_synapse"):
        out[key].pop("tau_window", None)
    out["neuron"]["membrane"].pop("tau_window", None)
    return out


def all_time_constants(cfg: ChipConfig) -> dict[str, float]:
    """Nominal time constants of every DPI family on the chip."""
    return {
        "membrane": cfg.neuron.membrane.tau,
        "exc_synapse": cfg.exc_synapse.tau,
        "inh_synapse": cfg.inh_synapse.tau,
    }


def lognormal_sigma(cv: float) -> float:
    return math.sqrt(math.log1p(cv * cv))
