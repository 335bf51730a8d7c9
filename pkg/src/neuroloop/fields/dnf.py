r"""One-dimensional dynamic neural fields.

.. math::
    \tau \dot u(x, t) = -u(x, t) + h + I(x, t) + \int f(u(x', t))\, w(|x - x'|)\, dx'

with a logistic output nonlinearity ``f`` and a difference-of-Gaussians
("Mexican hat") interaction kernel ``w``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import FieldFault, ParameterError, StabilityError

ZERO_PADDED = "zero"
PERIODIC = "periodic"


@dataclass(frozen=True)
class FieldParams:
    tau: float = 0.01
    h: float = -5.0
    n: int = 64
    dx: float = 1.0
    boundary: str = ZERO_PADDED
    beta: float = 4.0

    def __post_init__(self):
        if not self.h < 0:
            raise ParameterError(f"resting level h must be negative, got {self.h}")
        if int(self.n) < 3:
            raise ParameterError(f"grid size must be >= 3, got {self.n}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be > 0, got {self.tau}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if not self.dx > 0:
            raise ParameterError(f"dx must be > 0, got {self.dx}")
        if self.boundary not in (ZERO_PADDED, PERIODIC):
            raise ParameterError(f"boundary must be {ZERO_PADDED!r} or {PERIODIC!r}")


@dataclass(frozen=True)
class KernelParams:
    a_exc: float = 0.0
    a_inh: float = 0.0
    sigma_exc: float = 1.0
    sigma_inh: float = 2.0

    def __post_init__(self):
        if self.a_exc < 0 or self.a_inh < 0:
            raise ParameterError("kernel amplitudes must be >= 0")
        if not (self.sigma_exc > 0 and self.sigma_inh > 0):
            raise ParameterError("kernel widths must be > 0")
        if not self.sigma_inh > self.sigma_exc:
            warnings.warn("sigma_inh <= sigma_exc: kernel is not Mexican-hat shaped", stacklevel=3)


@dataclass(frozen=True)
class FieldState:
    u: np.ndarray
    t: float = 0.0

    @classmethod
    def resting(cls, p: FieldParams) -> "FieldState":
        return cls(np.full(p.n, float(p.h)), 0.0)


def mexican_hat(k: KernelParams, d):
    """Lateral interaction weight at feature distance ``d``."""
    d = np.abs(np.asarray(d, dtype=float))
    w = k.a_exc * np.exp(-d * d / (2 * k.sigma_exc**2)) - k.a_inh * np.exp(-d * d / (2 * k.sigma_inh**2))
    return float(w) if w.ndim == 0 else w


def sigmoid(u, beta: float = 4.0):
    """Logistic output nonlinearity ``1 / (1 + exp(-beta u))``."""
    u = np.asarray(u, dtype=float)
    z = np.exp(-np.abs(beta * u))
    out = np.where(u >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _kernel_matrix(k: KernelParams, n: int, dx: float, boundary: str) -> np.ndarray:
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    if boundary == PERIODIC:
        d = np.minimum(d, n - d)
    w = mexican_hat(k, d * dx) * dx
    w.setflags(write=False)
    return w


def _kernel_row(k: KernelParams, n: int, dx: float, boundary: str) -> np.ndarray:
    if boundary == PERIODIC:
        d = np.arange(n)
        d = np.minimum(d, n - d)
        return mexican_hat(k, d * dx) * dx
    d = np.arange(-(n - 1), n)
    return mexican_hat(k, d * dx) * dx


def lateral_input(u: np.ndarray, p: FieldParams, k: KernelParams) -> np.ndarray:
    """Convolution of the field output with the sampled kernel."""
    out = sigmoid(u, p.beta)
    if k.a_exc == 0 and k.a_inh == 0:
        return np.zeros_like(out)
    if p.n <= 512:
        return _kernel_matrix(k, p.n, p.dx, p.boundary) @ out
    row = _kernel_row(k, p.n, p.dx, p.boundary)
    if p.boundary == PERIODIC:
        return np.real(np.fft.ifft(np.fft.fft(out) * np.fft.fft(row)))
    m = 1 << int(math.ceil(math.log2(3 * p.n)))
    full = np.fft.irfft(np.fft.rfft(out, m) * np.fft.rfft(row, m), m)
    return full[p.n - 1 : 2 * p.n - 1]


def field_step(s: FieldState, p: FieldParams, k: KernelParams, inp, dt: float) -> FieldState:
    """One explicit Euler step; ``dt`` must not exceed ``tau / 10``."""
    if not 0 < dt <= p.tau / 10 * (1 + 1e-12):
        raise StabilityError(f"dt={dt} must lie in (0, tau/10] = (0, {p.tau / 10}]")
    inp = np.broadcast_to(np.asarray(inp, dtype=float), (p.n,))
    if not np.all(np.isfinite(inp)):
        raise FieldFault("field input is not finite")
    u = s.u
    du = -u + p.h + inp + lateral_input(u, p, k)
    u_new = u + (dt / p.tau) * du
    if not np.all(np.isfinite(u_new)):
        raise FieldFault(f"field state became non-finite at t={s.t + dt:.6g}")
    return FieldState(u_new, s.t + dt)


def simulate_field(
    p: FieldParams,
    k: KernelParams,
    inputs,
    duration: float,
    dt: float,
    state: FieldState | None = None,
    record_every: int = 0,
):
    """Integrate for ``duration`` seconds.

    ``inputs`` is either a fixed array or a callable ``t -> array``. Returns
    the final state and, if ``record_every > 0``, a list of recorded states.
    """
    s = state if state is not None else FieldState.resting(p)
    n_steps = int(round(duration / dt))
    trace = [s] if record_every else []
    for i in range(n_steps):
        inp = inputs(s.t) if callable(inputs) else inputs
        s = field_step(s, p, k, inp, dt)
        if record_every and (i + 1) % record_every == 0:
            trace.append(s)
    return s, trace


@dataclass(frozen=True)
class Peak:
    position: float
    value: float
    start: int
    stop: int


def detect_peaks(s: FieldState | np.ndarray, threshold: float = 0.0) -> list[Peak]:
    """Contiguous supra-threshold regions, ordered by position.

    ``position`` is the centroid weighted by activation above threshold.
    """
    u = s.u if isinstance(s, FieldState) else np.asarray(s, dtype=float)
    above = u > threshold
    if not above.any():
        return []
    padded = np.concatenate(([False], above, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.nonzero(edges == 1)[0]
    stops = np.nonzero(edges == -1)[0]
    peaks = []
    for a, b in zip(starts, stops):
        seg = u[a:b] - threshold
        pos = float(np.dot(np.arange(a, b), seg) / seg.sum())
        peaks.append(Peak(pos, float(u[a:b].max()), int(a), int(b)))
    return peaks


def gaussian_input(p: FieldParams, center: float, amplitude: float, width: float) -> np.ndarray:
    x = np.arange(p.n) * p.dx
    d = x - center * p.dx
    if p.boundary == PERIODIC:
        span = p.n * p.dx
        d = (d + span / 2) % span - span / 2
    return amplitude * np.exp(-d * d / (2 * width * width))


def write_trajectory_csv(path, states: list[FieldState]) -> None:
    """CSV with header ``t,u_0,...,u_{N-1}``."""
    if not states:
        raise ParameterError("no states to write")
    n = states[0].u.size
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"u_{i}" for i in range(n)) + "\n")
        for s in states:
            fh.write(f"{s.t:.6f}," + ",".join(f"{v:.6f}" for v in s.u) + "\n")
