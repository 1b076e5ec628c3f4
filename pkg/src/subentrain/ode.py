"""Vector fields, fixed-step RK4 integration, and limit-cycle location.

Units are milliseconds and rad/ms throughout.  The built-in model is the
Hodgkin-Huxley membrane with the control current entering the voltage
equation; arbitrary user fields plug in through :class:`VectorField`.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import (
    IntegrationDivergedError,
    NoLimitCycleError,
    NotConvergedError,
)

DEFAULT_DT = 0.001          # ms; resolves the HH spike upstroke
DEFAULT_SETTLE_PERIODS = 20
DEFAULT_RESOLUTION = 4096   # phase samples per cycle


@dataclass(frozen=True)
class HhParameters:
    """Hodgkin-Huxley membrane constants (mV, mS/cm^2, uA/cm^2, uF/cm^2)."""

    V_Na: float = 50.0
    V_K: float = -77.0
    V_L: float = -54.4
    g_Na: float = 120.0
    g_K: float = 36.0
    g_L: float = 0.3
    I_b: float = 10.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("g_Na", "g_K", "g_L", "c"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in _kernels.HH_PARAM_ORDER])


@dataclass(frozen=True, eq=False)
class VectorField:
    """A smooth controlled ODE x' = f(x, u) with a scalar input channel.

    ``rhs(x, u)`` maps a state vector and scalar input to the state
    derivative; ``rhs_batch``, when given, evaluates rows of an (m, n)
    state array at once and is used to vectorize Jacobian grids.
    ``input_channel`` is the index of the state equation the input
    enters (the voltage equation for Hodgkin-Huxley).
    """

    dimension: int
    rhs: Callable[[np.ndarray, float], np.ndarray]
    input_channel: int = 0
    parameters: dict = dc_field(default_factory=dict)
    kind: str = "custom"
    rhs_batch: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    jit_params: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")

    def input_direction(self, x: np.ndarray) -> np.ndarray:
        """b(x) = df/du at u=0, by central difference (exact for linear entry)."""
        d = 1e-6
        return (self.rhs(x, d) - self.rhs(x, -d)) / (2.0 * d)

    def eval_batch(self, X: np.ndarray, u: float = 0.0) -> np.ndarray:
        if self.rhs_batch is not None:
            return self.rhs_batch(X, u)
        return np.stack([self.rhs(x, u) for x in X])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fixed-step integration record: states[k] at t = k*dt with input inputs[k]."""

    dt: float
    states: np.ndarray
    inputs: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.states))


@dataclass(frozen=True, eq=False)
class LimitCycle:
    """Attractive periodic orbit sampled at K uniform phases.

    ``samples[k]`` is the state at phase theta_k = 2*pi*k/K with phase
    zero at the maximum of the first state variable; ``base_point`` is
    the theta = 0 state and ``omega * period == 2*pi`` by construction.
    """

    period: float
    samples: np.ndarray
    dt: float

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def base_point(self) -> np.ndarray:
        return self.samples[0]

    @property
    def resolution(self) -> int:
        return len(self.samples)

    def state_at_phase(self, theta: float) -> np.ndarray:
        """Nearest-sample state lookup (grid is dense enough for seeding)."""
        k = int(round(theta / (2.0 * np.pi) * self.resolution)) % self.resolution
        return self.samples[k]


def hh_field(params: HhParameters = HhParameters()) -> VectorField:
    """Hodgkin-Huxley vector field; u adds to the membrane current."""
    p = params.as_vector()

    def rhs(x, u=0.0):
        return _kernels._hh_rhs.py_func(np.asarray(x, dtype=float), float(u), p)

    def rhs_batch(X, u=0.0):
        V, m, h, n = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
        a_m = 0.1 * (V + 40.0) / (1.0 - np.exp(-(V + 40.0) / 10.0))
        b_m = 4.0 * np.exp(-(V + 65.0) / 18.0)
        a_h = 0.07 * np.exp(-(V + 65.0) / 20.0)
        b_h = 1.0 / (1.0 + np.exp(-(V + 35.0) / 10.0))
        a_n = 0.01 * (V + 55.0) / (1.0 - np.exp(-(V + 55.0) / 10.0))
        b_n = 0.125 * np.exp(-(V + 65.0) / 80.0)
        out = np.empty_like(X)
        out[:, 0] = (
            p[6] + u
            - p[3] * h * (V - p[0]) * m ** 3
            - p[4] * (V - p[1]) * n ** 4
            - p[5] * (V - p[2])
        ) / p[7]
        out[:, 1] = a_m * (1.0 - m) - b_m * m
        out[:, 2] = a_h * (1.0 - h) - b_h * h
        out[:, 3] = a_n * (1.0 - n) - b_n * n
        return out

    return VectorField(
        dimension=4,
        rhs=rhs,
        input_channel=0,
        parameters={k: getattr(params, k) for k in _kernels.HH_PARAM_ORDER},
        kind="hodgkin-huxley",
        rhs_batch=rhs_batch,
        jit_params=p,
    )


HH_REST_STATE = np.array([-65.0, 0.05, 0.6, 0.32])


def _as_input_fn(u):
    if u is None:
        return lambda t: 0.0
    if np.isscalar(u):
        val = float(u)
        return lambda t: val
    return u


def integrate(field: VectorField, x0, u=None, dt: float = DEFAULT_DT, steps: int = 1000) -> Trajectory:
    """Classical fixed-step RK4.

    ``u`` may be None (autonomous), a scalar, or a callable of time.
    Raises :class:`IntegrationDivergedError` naming the first step at
    which a non-finite state appears.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    ufn = _as_input_fn(u)
    x = np.asarray(x0, dtype=float).copy()
    states = np.empty((steps + 1, len(x)))
    inputs = np.empty(steps + 1)
    states[0] = x
    inputs[0] = ufn(0.0)
    f = field.rhs
    for k in range(steps):
        t = k * dt
        u1 = ufn(t)
        um = ufn(t + 0.5 * dt)
        u4 = ufn(t + dt)
        k1 = f(x, u1)
        k2 = f(x + 0.5 * dt * k1, um)
        k3 = f(x + 0.5 * dt * k2, um)
        k4 = f(x + dt * k3, u4)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationDivergedError(k + 1)
        states[k + 1] = x
        inputs[k + 1] = u4
    return Trajectory(dt=dt, states=states, inputs=inputs)


def _march_states(field: VectorField, x0, dt: float, steps: int) -> np.ndarray:
    """Autonomous trajectory as a plain array, via the jit kernel when available."""
    if field.kind == "hodgkin-huxley" and field.jit_params is not None:
        traj = _kernels.hh_march(np.asarray(x0, dtype=float), field.jit_params, dt, steps)
        if not np.all(np.isfinite(traj[-1])):
            bad = np.flatnonzero(~np.isfinite(traj).all(axis=1))
            raise IntegrationDivergedError(int(bad[0]))
        return traj
    return integrate(field, x0, None, dt, steps).states


def _refine_peaks(x1: np.ndarray, dt: float, threshold: float) -> np.ndarray:
    """Peak times of a sampled signal by quadratic fit through each local max."""
    y0 = x1[:-2]
    y1 = x1[1:-1]
    y2 = x1[2:]
    mask = (y1 >= y0) & (y1 > y2) & (y1 > threshold)
    idx = np.flatnonzero(mask) + 1
    if len(idx) == 0:
        return np.zeros(0)
    denom = x1[idx - 1] - 2.0 * x1[idx] + x1[idx + 1]
    delta = np.where(denom != 0.0, 0.5 * (x1[idx - 1] - x1[idx + 1]) / np.where(denom == 0.0, 1.0, denom), 0.0)
    return (idx + delta) * dt


def _peak_threshold(x1: np.ndarray) -> float:
    lo, hi = np.min(x1), np.max(x1)
    return lo + 0.5 * (hi - lo)


def find_limit_cycle(
    field: VectorField,
    x0,
    settle_time: float | None = None,
    resolution: int = DEFAULT_RESOLUTION,
    dt: float = DEFAULT_DT,
    min_intervals: int = 10,
) -> LimitCycle:
    """Locate an attractive limit cycle and sample it on a uniform phase grid.

    Integrates past the transient, measures the period as the mean of at
    least ``min_intervals`` consecutive intervals between maxima of the
    first state variable (each peak time refined by a quadratic fit
    through its three bracketing samples), then resamples one period at
    ``resolution`` uniform phases starting from a peak.
    """
    x0 = np.asarray(x0, dtype=float)

    # Pilot run to bracket the oscillation timescale.
    chunk = 65536
    states = _march_states(field, x0, dt, chunk)
    peaks = _refine_peaks(states[:, 0], dt, _peak_threshold(states[:, 0]))
    grown = 1
    while len(peaks) < 4 and grown < 16:
        more = _march_states(field, states[-1], dt, chunk)
        states = np.vstack([states[:-1], more])
        peaks = _refine_peaks(states[:, 0], dt, _peak_threshold(states[:, 0]))
        grown += 1
    if len(peaks) < 4:
        raise NoLimitCycleError("no repeated maxima of the first state variable found")
    T_est = float(np.mean(np.diff(peaks)[-3:]))

    if settle_time is None:
        settle_time = DEFAULT_SETTLE_PERIODS * T_est
    extra = settle_time - len(states[:-1]) * dt
    if extra > 0:
        states = _march_states(field, states[-1], dt, int(np.ceil(extra / dt)))

    # Measurement window: enough room for min_intervals + margin.
    n_meas = int(np.ceil((min_intervals + 3) * T_est / dt))
    meas = _march_states(field, states[-1], dt, n_meas)
    peaks = _refine_peaks(meas[:, 0], dt, _peak_threshold(meas[:, 0]))
    if len(peaks) < min_intervals + 1:
        raise NoLimitCycleError(
            f"found only {len(peaks)} maxima in the measurement window"
        )
    intervals = np.diff(peaks)[-min_intervals:]
    spread = (np.max(intervals) - np.min(intervals)) / np.mean(intervals)
    if spread > 1e-6:
        raise NotConvergedError(
            f"peak intervals still vary by {spread:.2e} relative after settling"
        )
    period = float(np.mean(intervals))

    # Land exactly on the last refined peak, then resample the cycle.
    t_peak = peaks[-1]
    k0 = int(np.floor(t_peak / dt))
    x = meas[k0]
    frac = t_peak - k0 * dt
    if frac > 1e-15:
        x = _single_rk4_span(field, x, frac, max(1, int(np.ceil(frac / dt))))
    seg = period / resolution
    n_sub = max(1, int(np.ceil(seg / dt)))
    h = seg / n_sub
    samples = np.empty((resolution, field.dimension))
    for k in range(resolution):
        samples[k] = x
        x = _single_rk4_span(field, x, h * n_sub, n_sub)
    closure = np.max(np.abs(x - samples[0]) / np.maximum(np.max(np.abs(samples), axis=0), 1e-12))
    if closure > 1e-4:
        raise NotConvergedError(f"cycle fails to close: relative gap {closure:.2e}")
    return LimitCycle(period=period, samples=samples, dt=dt)


def _single_rk4_span(field: VectorField, x, span: float, n: int) -> np.ndarray:
    """March ``n`` RK4 steps of size span/n (kernel fast path when possible)."""
    h = span / n
    if field.kind == "hodgkin-huxley" and field.jit_params is not None:
        return _kernels.hh_march(np.asarray(x, dtype=float), field.jit_params, h, n)[-1]
    f = field.rhs
    x = np.asarray(x, dtype=float)
    for _ in range(n):
        k1 = f(x, 0.0)
        k2 = f(x + 0.5 * h * k1, 0.0)
        k3 = f(x + 0.5 * h * k2, 0.0)
        k4 = f(x + h * k3, 0.0)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def model_from_config(config: dict):
    """Build (field, options) from a model configuration document.

    Expected shape: {"model": "hodgkin-huxley", "params": {...},
    "dt": 0.001, "settle_periods": 20, "resolution": 4096}.
    """
    name = config.get("model")
    if name != "hodgkin-huxley":
        raise ValueError(f"unknown model {name!r}; built-in models: hodgkin-huxley")
    params = HhParameters(**config.get("params", {}))
    opts = {
        "dt": float(config.get("dt", DEFAULT_DT)),
        "settle_periods": float(config.get("settle_periods", DEFAULT_SETTLE_PERIODS)),
        "resolution": int(config.get("resolution", DEFAULT_RESOLUTION)),
    }
    return hh_field(params), opts
