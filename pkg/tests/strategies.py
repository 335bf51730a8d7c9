"""Hypothesis strategies shared across the test modules."""

from hypothesis import strategies as st

from neuroloop.dynamics import DpiParams, DpiState

THERMAL_VOLTAGE = 0.025
KAPPA = 0.7


@st.composite
def dpi_params(draw, tau_range=(5e-3, 0.5)):
    """Valid DPI parameters with a time constant inside ``tau_range``."""
    tau = draw(st.floats(*tau_range))
    cap = draw(st.floats(0.2e-12, 10e-12))
    gain = draw(st.floats(0.1, 10.0))
    i_tau = cap * THERMAL_VOLTAGE / (KAPPA * tau)
    return DpiParams(capacitance=cap, leak_current=i_tau, gain_current=gain * i_tau)


currents = st.floats(0.0, 1e-9, allow_subnormal=False)
steps = st.floats(1e-6, 0.2)


@st.composite
def dpi_states(draw):
    return DpiState(i_out=draw(currents))
