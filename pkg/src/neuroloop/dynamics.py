r"""Behavioral models of the differential-pair integrator (DPI).

The DPI is a subthreshold log-domain current-mode circuit used both as a
synapse and as the membrane of an integrate-and-fire neuron. Its output
current obeys the nonlinear first-order ODE

.. math::
    \tau \left(1 + \frac{I_g}{I_{out}}\right) \frac{dI_{out}}{dt} + I_{out}
    = \frac{I_g I_{in}}{I_\tau} - I_g

with :math:`\tau = C U_T / (\kappa I_\tau)`, which reduces to the linear
filter :math:`\tau \dot I_{out} + I_{out} = (I_g / I_\tau) I_{in}` when
:math:`I_{in} \gg I_\tau`.

All operations take and return immutable values; nothing here holds state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .errors import ParameterError

#: Default subthreshold CMOS constants.
THERMAL_VOLTAGE = 0.025
KAPPA = 0.7
DARK_CURRENT = 0.5e-12
#: Current step produced by a unit-weight input spike.
UNIT_CURRENT = 10e-12

TAU_HARD_WINDOW = (1e-3, 1.0)
TAU_SOFT_WINDOW = (5e-3, 0.5)


class TimeConstantWarning(UserWarning):
    """Time constant outside the range useful for natural signals."""


@dataclass(frozen=True)
class DpiParams:
    """Circuit parameters of one DPI. Currents in amperes, capacitance in farads."""

    capacitance: float = 1.4e-12
    leak_current: float = 5e-12
    gain_current: float = 5e-12
    thermal_voltage: float = THERMAL_VOLTAGE
    kappa: float = KAPPA
    dark_current: float = DARK_CURRENT
    tau_window: tuple[float, float] = TAU_HARD_WINDOW

    def __post_init__(self):
        validate_params(self)

    @property
    def tau(self) -> float:
        return time_constant(self)

    @property
    def gain(self) -> float:
        """Steady-state current gain I_g / I_tau of the linear regime."""
        return self.gain_current / self.leak_current

    @classmethod
    def from_tau(cls, tau: float, gain: float = 1.0, **kw) -> "DpiParams":
        """Build parameters that realize time constant ``tau`` via the leak current."""
        capacitance = kw.pop("capacitance", 1.4e-12)
        u_t = kw.get("thermal_voltage", THERMAL_VOLTAGE)
        kappa = kw.get("kappa", KAPPA)
        if tau <= 0 or gain <= 0:
            raise ParameterError("tau and gain must be positive")
        i_tau = capacitance * u_t / (kappa * tau)
        return cls(capacitance=capacitance, leak_current=i_tau, gain_current=gain * i_tau, **kw)


def validate_params(p: DpiParams) -> None:
    if not p.capacitance > 0:
        raise ParameterError(f"capacitance must be > 0, got {p.capacitance!r}")
    if not p.thermal_voltage > 0:
        raise ParameterError(f"thermal_voltage must be > 0, got {p.thermal_voltage!r}")
    if not 0 < p.kappa < 1:
        raise ParameterError(f"kappa must lie in (0, 1), got {p.kappa!r}")
    for name in ("dark_current", "leak_current", "gain_current"):
        value = getattr(p, name)
        if not value > 0:
            raise ParameterError(f"{name} must be > 0, got {value!r}")
    lo, hi = p.tau_window
    tau = p.capacitance * p.thermal_voltage / (p.kappa * p.leak_current)
    if not lo <= tau <= hi:
        raise ParameterError(f"time constant {tau:.6g} s outside validity window [{lo}, {hi}] s")
    if not TAU_SOFT_WINDOW[0] <= tau <= TAU_SOFT_WINDOW[1]:
        warnings.warn(
            f"time constant {tau * 1e3:.3g} ms outside the 5-500 ms natural-signal range",
            TimeConstantWarning,
            stacklevel=3,
        )


def time_constant(p: DpiParams) -> float:
    """Return ``C * U_T / (kappa * I_tau)`` in seconds."""
    if not isinstance(p, DpiParams):
        raise ParameterError(f"expected DpiParams, got {type(p).__name__}")
    return p.capacitance * p.thermal_voltage / (p.kappa * p.leak_current)


@dataclass(frozen=True)
class DpiState:
    i_out: float = 0.0
    t: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        if self.i_out < self.floor:
            object.__setattr__(self, "i_out", self.floor)


def _check_step(dt: float, i_in: float) -> None:
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt!r}")
    if not i_in >= 0:
        raise ParameterError(f"input current must be >= 0, got {i_in!r}")


def _full_rhs(i_out: float, i_in: float, p: DpiParams, tau: float) -> float:
    # dark-current floor regularizes the I_g / I_out singularity
    denom = tau * (1.0 + p.gain_current / max(i_out, p.dark_current))
    return (p.gain_current * i_in / p.leak_current - p.gain_current - i_out) / denom


def full_steady_state(p: DpiParams, i_in: float) -> float:
    return max(0.0, p.gain_current * (i_in / p.leak_current - 1.0))


def linear_steady_state(p: DpiParams, i_in: float) -> float:
    return p.gain_current / p.leak_current * i_in


def dpi_step_full(
    s: DpiState, p: DpiParams, i_in: float, dt: float, max_substep: float | None = None
) -> DpiState:
    """Advance the nonlinear DPI equation by ``dt`` with classical RK4.

    Sub-steps never exceed ``tau / 100`` (or ``max_substep`` if smaller).
    """
    _check_step(dt, i_in)
    tau = time_constant(p)
    h_max = tau / 100.0 if max_substep is None else min(max_substep, tau / 100.0)
    n = max(1, math.ceil(dt / h_max - 1e-9))
    h = dt / n
    y = s.i_out
    for _ in range(n):
        k1 = _full_rhs(y, i_in, p, tau)
        k2 = _full_rhs(max(y + 0.5 * h * k1, s.floor), i_in, p, tau)
        k3 = _full_rhs(max(y + 0.5 * h * k2, s.floor), i_in, p, tau)
        k4 = _full_rhs(max(y + h * k3, s.floor), i_in, p, tau)
        y = max(y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), s.floor)
    return replace(s, i_out=y, t=s.t + dt)


def dpi_step_linear(s: DpiState, p: DpiParams, i_in: float, dt: float) -> DpiState:
    """Exact update of the linear DPI filter with input held constant over ``dt``."""
    _check_step(dt, i_in)
    i_ss = p.gain_current / p.leak_current * i_in
    x = dt / time_constant(p)
    # i0 * e^-x + i_ss * (1 - e^-x): both terms are non-negative, so no cancellation for dt << tau
    i_out = s.i_out * math.exp(-x) - i_ss * math.expm1(-x)
    return replace(s, i_out=max(i_out, s.floor), t=s.t + dt)


def dpi_inject_spike(
    s: DpiState, p: DpiParams, weight: float, unit_current: float = UNIT_CURRENT
) -> DpiState:
    """Instantaneous current jump caused by one input spike of the given weight."""
    if not weight >= 0:
        raise ParameterError(f"spike weight must be >= 0, got {weight!r}")
    if weight == 0:
        return s
    return replace(s, i_out=s.i_out + weight * p.gain * unit_current)


@dataclass(frozen=True)
class NeuronParams:
    membrane: DpiParams = DpiParams(capacitance=2.8e-12)
    threshold: float = 20e-12
    reset_current: float = 0.0
    refractory: float = 2e-3

    def __post_init__(self):
        if not self.threshold > self.reset_current >= 0:
            raise ParameterError(
                f"need threshold > reset_current >= 0, got {self.threshold!r}, {self.reset_current!r}"
            )
        if not self.refractory >= 0:
            raise ParameterError(f"refractory must be >= 0, got {self.refractory!r}")


@dataclass(frozen=True)
class NeuronState:
    membrane: DpiState = DpiState()
    refractory_until: float = -math.inf
    last_spike_time: float | None = None

    @property
    def t(self) -> float:
        return self.membrane.t


def neuron_step(
    n: NeuronState, p: NeuronParams, input_current: float, dt: float
) -> tuple[NeuronState, bool]:
    """Advance an integrate-and-fire neuron by one step.

    The membrane is held at the reset current while refractory. Threshold
    crossings are detected at the end of the step and stamped with that time.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt!r}")
    t = n.membrane.t
    # tolerance absorbs rounding in the accumulated step times
    if t < n.refractory_until - 1e-6 * dt:
        mem = replace(n.membrane, i_out=p.reset_current, t=t + dt)
        return replace(n, membrane=mem), False
    mem = dpi_step_linear(n.membrane, p.membrane, max(input_current, 0.0), dt)
    if mem.i_out >= p.threshold:
        mem = replace(mem, i_out=p.reset_current)
        return NeuronState(mem, refractory_until=mem.t + p.refractory, last_spike_time=mem.t), True
    return replace(n, membrane=mem), False
