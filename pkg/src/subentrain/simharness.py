"""Simulation-side validation: lock detection, boundary search, rates.

Every theoretical object in the library is checked here by direct
simulation.  Phase-model locking inspects the slow phase psi_k - Omega k
T_e over cycles 46..50 at tolerance 0.1 rad; state-space locking
inspects the once-per-cycle samples of the first state variable over
cycles 200..250 at 1e-2 of the unforced peak-to-peak amplitude.
Empirical tongue boundaries come from bisection between 0.9 and 1.1
times the theoretical power estimate, terminating at one percent of it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .arnold import TongueBoundary
from .errors import (
    InsufficientDataError,
    InsufficientDecayError,
    IntegrationDivergedError,
    NoBoundaryFoundError,
)
from .interaction import SubharmonicRatio, fixed_points, interaction
from .ode import LimitCycle, VectorField, integrate
from .phase import PhaseModel
from .synthesis import Waveform

EPS_PHASE = 0.1          # rad, phase-model lock tolerance over cycles 46..50
EPS_STATE = 1e-2         # relative to unforced peak-to-peak, cycles 200..250
PHASE_LOCK_CYCLES = 50
STATE_LOCK_CYCLES = 250
DEFAULT_STEPS_PER_CYCLE = 512
RATE_FLOOR = 1e-4        # rad, fit-window floor for rate estimation


@dataclass(frozen=True, eq=False)
class EntrainmentVerdict:
    locked: bool
    series: np.ndarray              # the inspected slow-phase or x1 samples
    asymptotic: Optional[float] = None


@dataclass(frozen=True, eq=False)
class RateEstimate:
    kappa: float
    intercept: float
    residual: float                 # RMS of the log-linear fit residual
    source: str                     # "phase" or "state"
    n_points: int

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "intercept": self.intercept,
                "residual": self.residual, "source": self.source}


def integrate_phase(model: PhaseModel, waveform: Waveform, psi0: float, cycles: int,
                    steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE) -> np.ndarray:
    """psi sampled at multiples of T_e = 2*pi/Omega under u = v(Omega_f t)."""
    omega_target = waveform.omega_target
    te = 2.0 * np.pi / omega_target
    dt = te / steps_per_cycle
    Z, v = model.Z, waveform.series
    return _kernels.phase_march(
        float(psi0), model.omega, Z.a0, Z.a, Z.b, v.a0, v.a, v.b,
        waveform.forcing_frequency, dt, cycles * steps_per_cycle, steps_per_cycle,
    )


def detect_entrainment_phase(psi_series: np.ndarray, omega_target: float) -> EntrainmentVerdict:
    """Locked iff the slow phase stays within 0.1 rad over cycles 46..50."""
    psi = np.asarray(psi_series, dtype=float)
    if len(psi) < PHASE_LOCK_CYCLES + 1:
        raise InsufficientDataError(
            f"need at least {PHASE_LOCK_CYCLES + 1} cycle samples, got {len(psi)}"
        )
    te = 2.0 * np.pi / omega_target
    k = np.arange(len(psi))
    phi = psi - omega_target * k * te
    window = phi[46 : PHASE_LOCK_CYCLES + 1]
    locked = bool(np.max(np.abs(window - window[0])) <= EPS_PHASE)
    asymptotic = float(np.mean(window)) if locked else None
    return EntrainmentVerdict(locked=locked, series=phi, asymptotic=asymptotic)


def _forced_state_trace(field: VectorField, x0: np.ndarray, waveform: Waveform,
                        dt: float, steps: int) -> np.ndarray:
    """x1 trace under u(t) = v(Omega_f t); jit path for the built-in model."""
    v = waveform.series
    if field.kind == "hodgkin-huxley" and field.jit_params is not None:
        trace, _ = _kernels.hh_march_forced_v(
            np.asarray(x0, dtype=float), field.jit_params, dt, steps,
            v.a0, v.a, v.b, waveform.forcing_frequency,
        )
        if not np.all(np.isfinite(trace)):
            raise IntegrationDivergedError(int(np.flatnonzero(~np.isfinite(trace))[0]))
        return trace
    omega_f = waveform.forcing_frequency
    traj = integrate(field, x0, lambda t: v.eval(omega_f * t), dt, steps)
    return traj.states[:, 0]


def detect_entrainment_state(field: VectorField, cycle: LimitCycle, waveform: Waveform,
                             omega_target: Optional[float] = None,
                             dt: Optional[float] = None) -> EntrainmentVerdict:
    """State-space lock test sampling x1 once per target period.

    Starts on the unforced cycle at phase zero; the tolerance is 1e-2 of
    the unforced peak-to-peak amplitude of x1.
    """
    if omega_target is None:
        omega_target = waveform.omega_target
    te = 2.0 * np.pi / omega_target
    if dt is None:
        dt = cycle.dt
    n_per = max(1, int(round(te / dt)))
    dt_eff = te / n_per
    steps = STATE_LOCK_CYCLES * n_per
    trace = _forced_state_trace(field, cycle.base_point, waveform, dt_eff, steps)
    y = trace[:: n_per]
    window = y[200 : STATE_LOCK_CYCLES + 1]
    ptp = float(np.max(cycle.samples[:, 0]) - np.min(cycle.samples[:, 0]))
    locked = bool(np.max(np.abs(window - window[0])) <= EPS_STATE * ptp)
    asymptotic = float(np.mean(window)) if locked else None
    return EntrainmentVerdict(locked=locked, series=y, asymptotic=asymptotic)


def min_power_bisection(lock_test: Callable[[float], bool], p_estimate: float,
                        rel_tol: float = 0.01, expand: float = 1.5,
                        max_expansions: int = 8) -> float:
    """Minimum locking power by bisection around a theoretical estimate.

    Brackets with 0.9 and 1.1 times the estimate, expanding geometrically
    when the guess straddles nothing, and stops once the bracket is
    within ``rel_tol`` times the estimate.
    """
    if p_estimate <= 0.0:
        raise ValueError("p_estimate must be positive")
    lo, hi = 0.9 * p_estimate, 1.1 * p_estimate
    n = 0
    while lock_test(lo):
        lo /= expand
        n += 1
        if n > max_expansions:
            raise NoBoundaryFoundError("still locked after shrinking the lower bound")
    n = 0
    while not lock_test(hi):
        hi *= expand
        n += 1
        if n > max_expansions:
            raise NoBoundaryFoundError("never locked after growing the upper bound")
    while hi - lo > rel_tol * p_estimate:
        mid = 0.5 * (lo + hi)
        if lock_test(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _log_linear_fit(times: np.ndarray, logs: np.ndarray, source: str) -> RateEstimate:
    if len(times) < 8:
        raise InsufficientDecayError(
            f"only {len(times)} usable points for the {source} rate fit (need 8)"
        )
    A = np.stack([times, np.ones_like(times)], axis=1)
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = logs - A @ coef
    return RateEstimate(kappa=float(coef[0]), intercept=float(coef[1]),
                        residual=float(np.sqrt(np.mean(resid ** 2))),
                        source=source, n_points=len(times))


def rate_phase(psi_series: np.ndarray, omega_target: float,
               phi_star: Optional[float] = None) -> RateEstimate:
    """kappa_1 from the log decay of the slow phase toward its lock value.

    With ``phi_star`` given, fits ln|phi_k - phi_star| against k T_e over
    the window where the offset lies in [1e-4, half the initial offset];
    without it, uses the increment form ln|phi_{k+1} - phi_k|.  The
    first tenth of the series is always excluded.
    """
    psi = np.asarray(psi_series, dtype=float)
    te = 2.0 * np.pi / omega_target
    k = np.arange(len(psi))
    phi = psi - omega_target * k * te
    skip = len(phi) // 10
    if phi_star is not None:
        dev = np.abs(phi - phi_star)
        ceiling = 0.5 * dev[0]
        mask = (k >= skip) & (dev >= RATE_FLOOR) & (dev <= ceiling)
        return _log_linear_fit(te * k[mask], np.log(dev[mask]), "phase")
    inc = np.abs(np.diff(phi))
    kk = np.arange(len(inc))
    ceiling = 0.5 * max(inc[0], RATE_FLOOR)
    mask = (kk >= skip) & (inc >= RATE_FLOOR) & (inc <= ceiling)
    return _log_linear_fit(te * kk[mask], np.log(inc[mask]), "phase")


def rate_state(peak_times: np.ndarray, omega_target: float) -> RateEstimate:
    """kappa_2 from per-cycle phase increments of refined x1 peak times.

    Increment j is 2*pi (T_e - (t_{j+1} - t_j)) / T_e; the log of its
    magnitude is fit against j T_e.
    """
    t = np.asarray(peak_times, dtype=float)
    if len(t) < 20:
        raise InsufficientDataError(f"need at least 20 peaks, got {len(t)}")
    te = 2.0 * np.pi / omega_target
    inc = 2.0 * np.pi * (te - np.diff(t)) / te
    mag = np.abs(inc)
    if np.all(mag < 1e-12):
        raise InsufficientDecayError("phase increments already below 1e-12")
    j = np.arange(len(inc))
    skip = len(inc) // 10
    mask = (j >= skip) & (mag >= RATE_FLOOR)
    return _log_linear_fit(te * j[mask], np.log(mag[mask]), "state")


def forced_peak_times(field: VectorField, cycle: LimitCycle, waveform: Waveform,
                      horizon_cycles: int, dt: Optional[float] = None,
                      x0: Optional[np.ndarray] = None) -> np.ndarray:
    """Refined x1 peak times of the forced system, for kappa_2 experiments."""
    if dt is None:
        dt = cycle.dt
    te = 2.0 * np.pi / waveform.omega_target
    steps = int(np.ceil(horizon_cycles * te / dt))
    start = cycle.base_point if x0 is None else x0
    trace = _forced_state_trace(field, start, waveform, dt, steps)
    lo, hi = np.min(trace), np.max(trace)
    thr = lo + 0.5 * (hi - lo)
    y0, y1, y2 = trace[:-2], trace[1:-1], trace[2:]
    idx = np.flatnonzero((y1 >= y0) & (y1 > y2) & (y1 > thr)) + 1
    denom = trace[idx - 1] - 2.0 * trace[idx] + trace[idx + 1]
    denom = np.where(denom == 0.0, 1.0, denom)
    delta = 0.5 * (trace[idx - 1] - trace[idx + 1]) / denom
    return (idx + delta) * dt


@dataclass(frozen=True, eq=False)
class TongueJob:
    """One empirical boundary point: a lock test and its power estimate."""

    abscissa: float
    p_estimate: float
    lock_test: Callable[[float], bool]


def phase_lock_test(model: PhaseModel, vtilde: Waveform,
                    cycles: int = PHASE_LOCK_CYCLES,
                    steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE) -> Callable[[float], bool]:
    """Lock test P -> bool for the phase model under P * vtilde.

    Initializes at a stable fixed point of the averaged drift when one
    exists (the boundary protocol), at phase zero otherwise.
    """
    dw = model.omega - vtilde.omega_target

    def test(p: float) -> bool:
        scaled = vtilde.scaled(p)
        lam = interaction(model.Z, scaled.series, vtilde.ratio)
        stable, _ = fixed_points(lam, dw)
        psi0 = stable[0] if stable else 0.0
        psi = integrate_phase(model, scaled, psi0, cycles, steps_per_cycle)
        return detect_entrainment_phase(psi, vtilde.omega_target).locked

    return test


def state_lock_test(field: VectorField, cycle: LimitCycle, vtilde: Waveform,
                    dt: Optional[float] = None) -> Callable[[float], bool]:
    """Lock test P -> bool for the full state-space model under P * vtilde."""

    def test(p: float) -> bool:
        return detect_entrainment_state(field, cycle, vtilde.scaled(p), dt=dt).locked

    return test


def tongue_sweep(jobs: Sequence[TongueJob], ratio: SubharmonicRatio,
                 axis: str = "forcing-frequency", label: str = "phase-sim",
                 case: str = "B", max_workers: int = 1) -> TongueBoundary:
    """Empirical tongue boundary: one bisection per job, optionally threaded.

    Per-point failures are recorded as absent values, not raised; the
    aggregation order is the job order regardless of worker count.
    """

    def run(job: TongueJob) -> float:
        try:
            return min_power_bisection(job.lock_test, job.p_estimate)
        except (NoBoundaryFoundError, ValueError):
            return np.nan

    if max_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            found = list(pool.map(run, jobs))
    else:
        found = [run(j) for j in jobs]
    abscissas = np.array([j.abscissa for j in jobs], dtype=float)
    p = np.array(found, dtype=float)
    return TongueBoundary(axis=axis, abscissas=abscissas, p_left=p,
                          p_right=np.full_like(p, np.nan), case=case,
                          ratio=ratio, label=label)
