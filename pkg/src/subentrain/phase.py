"""Phase reduction: monodromy analysis and phase response curves.

The projection method is the default PRC engine: for every grid phase it
forms the variational monodromy matrix along the cycle, extracts the
adjoint eigenvector at the unit Floquet multiplier, and projects the
input direction onto it.  The adjoint method (backward integration of
m' = -A^T m) is kept as an independent cross-check because its forward
form is numerically unstable for strongly contracting cycles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fourier
from ._kernels import hh_march
from .errors import (
    AdjointUnstableError,
    DegenerateMonodromyError,
    NotConvergedError,
    SingularNormalizationError,
)
from .fourier import FourierSeries
from .ode import LimitCycle, VectorField

DEFAULT_PRC_PHASES = 512
_JACOBIAN_STEP = 1e-6  # relative to per-component state scale
_INPUT_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class PhaseModel:
    """Reduced oscillator psi' = omega + Z(psi) u."""

    omega: float
    Z: FourierSeries
    source: Optional[LimitCycle] = None

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")

    def to_dict(self) -> dict:
        return {"omega": self.omega, "Z": self.Z.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseModel":
        return cls(float(d["omega"]), FourierSeries.from_dict(d["Z"]))


@dataclass(frozen=True, eq=False)
class MonodromyResult:
    """Phi(T) together with its spectrum and adjoint unit eigenvector at 1."""

    matrix: np.ndarray
    m0: np.ndarray
    spectrum: np.ndarray


class _FlowGrid:
    """Cycle states and Jacobians sampled on a dyadic half-step grid.

    The nonlinear cycle is re-integrated over two periods at step h/2,
    so RK4 marches of the variational equation with step h can read
    A(t) at every stage point without interpolation.
    """

    def __init__(self, field: VectorField, cycle: LimitCycle, n_steps: int | None = None):
        T = cycle.period
        if n_steps is None:
            n_steps = 1 << max(12, int(np.ceil(np.log2(T / cycle.dt))))
        self.field = field
        self.cycle = cycle
        self.n_steps = n_steps
        self.h = T / n_steps
        half = 0.5 * self.h
        total = 4 * n_steps  # half-steps covering [0, 2T]
        if field.kind == "hodgkin-huxley" and field.jit_params is not None:
            self.states = hh_march(cycle.base_point.copy(), field.jit_params, half, total)
        else:
            self.states = _march_record(field, cycle.base_point, half, total)
        self.A = _jacobian_grid(field, self.states, cycle.samples)
        self.rhs0 = field.eval_batch(self.states, 0.0)

    def input_directions(self, idx: np.ndarray) -> np.ndarray:
        X = self.states[idx]
        d = _INPUT_STEP
        return (self.field.eval_batch(X, d) - self.field.eval_batch(X, -d)) / (2.0 * d)


def _march_record(field: VectorField, x0, h: float, steps: int) -> np.ndarray:
    f = field.rhs
    x = np.asarray(x0, dtype=float).copy()
    out = np.empty((steps + 1, len(x)))
    out[0] = x
    for k in range(steps):
        k1 = f(x, 0.0)
        k2 = f(x + 0.5 * h * k1, 0.0)
        k3 = f(x + 0.5 * h * k2, 0.0)
        k4 = f(x + h * k3, 0.0)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
    return out


def _jacobian_grid(field: VectorField, states: np.ndarray, cycle_samples: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of f(., 0) at every grid state."""
    n = field.dimension
    scale = np.max(np.abs(cycle_samples), axis=0)
    scale[scale < 1e-8] = 1.0
    A = np.empty((len(states), n, n))
    for j in range(n):
        d = _JACOBIAN_STEP * scale[j]
        Xp = states.copy()
        Xm = states.copy()
        Xp[:, j] += d
        Xm[:, j] -= d
        A[:, :, j] = (field.eval_batch(Xp, 0.0) - field.eval_batch(Xm, 0.0)) / (2.0 * d)
    return A


def _variational_transits(grid: _FlowGrid, starts: np.ndarray) -> np.ndarray:
    """Phi_theta(T) for each half-grid start index, batched RK4."""
    B = len(starts)
    n = grid.field.dimension
    A = grid.A
    h = grid.h
    Phi = np.broadcast_to(np.eye(n), (B, n, n)).copy()
    for k in range(grid.n_steps):
        i = starts + 2 * k
        A0 = A[i]
        A1 = A[i + 1]
        A2 = A[i + 2]
        K1 = A0 @ Phi
        K2 = A1 @ (Phi + (0.5 * h) * K1)
        K3 = A1 @ (Phi + (0.5 * h) * K2)
        K4 = A2 @ (Phi + h * K3)
        Phi += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
    return Phi


def _unit_adjoint_eigvecs(Ms: np.ndarray, tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Unit eigenvectors of M^T at multiplier 1 by shifted inverse iteration."""
    B, n, _ = Ms.shape
    MT = np.swapaxes(Ms, 1, 2)
    v = np.full((B, n), 1.0 / np.sqrt(n))
    shift = 1.0
    eye = np.eye(n)
    for _ in range(max_iter):
        try:
            w = np.linalg.solve(MT - shift * eye, v[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            shift = 1.0 + 1e-12 if shift == 1.0 else shift * (1.0 + 1e-9)
            continue
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        dots = np.einsum("bi,bi->b", w, v)
        w *= np.where(dots < 0.0, -1.0, 1.0)[:, None]
        drift = np.max(1.0 - np.abs(dots))
        v = w
        if drift < tol:
            return v
    worst = int(np.argmax(1.0 - np.abs(np.einsum("bi,bi->b", v, v))))
    raise NotConvergedError(f"eigenvector iteration failed to converge (batch index {worst})")


def monodromy(field: VectorField, cycle: LimitCycle, theta0: float = 0.0,
              n_steps: int | None = None) -> MonodromyResult:
    """Monodromy matrix Phi_theta0(T) of the variational equation.

    The Jacobian A(t) is evaluated on the cycle by central finite
    differences; theta0 is snapped to the integration grid.
    """
    grid = _FlowGrid(field, cycle, n_steps)
    start = int(round((theta0 % (2.0 * np.pi)) / (2.0 * np.pi) * 2 * grid.n_steps))
    M = _variational_transits(grid, np.array([start]))[0]
    spectrum = np.linalg.eigvals(M)
    if np.min(np.abs(spectrum - 1.0)) > 1e-3:
        raise DegenerateMonodromyError(
            f"no Floquet multiplier within 1e-3 of 1 (closest {spectrum[np.argmin(np.abs(spectrum - 1.0))]})"
        )
    m0 = _unit_adjoint_eigvecs(M[None])[0]
    return MonodromyResult(matrix=M, m0=m0, spectrum=spectrum)


def prc_projection(field: VectorField, cycle: LimitCycle, n_phases: int = DEFAULT_PRC_PHASES,
                   order: int = fourier.DEFAULT_ORDER, n_steps: int | None = None) -> PhaseModel:
    """Phase response curve by the per-phase monodromy projection method."""
    if n_phases < 128:
        raise ValueError("n_phases must be at least 128")
    grid = _FlowGrid(field, cycle, n_steps)
    if (2 * grid.n_steps) % n_phases != 0:
        raise ValueError("n_phases must divide twice the variational step count")
    stride = 2 * grid.n_steps // n_phases
    starts = stride * np.arange(n_phases)
    Phis = _variational_transits(grid, starts)
    mus = _unit_adjoint_eigvecs(Phis)
    f_th = grid.rhs0[starts]
    denom = np.einsum("bi,bi->b", mus, f_th)
    bad = np.abs(denom) < 1e-12 * np.linalg.norm(f_th, axis=1)
    if np.any(bad):
        theta_bad = 2.0 * np.pi * np.flatnonzero(bad)[0] / n_phases
        raise SingularNormalizationError(
            f"adjoint eigenvector orthogonal to the flow at theta={theta_bad:.6f}"
        )
    omega = cycle.omega
    m_th = (omega / denom)[:, None] * mus
    b_th = grid.input_directions(starts)
    Z_samples = np.einsum("bi,bi->b", m_th, b_th)
    Z = fourier.fit(Z_samples, order)
    return PhaseModel(omega=omega, Z=Z, source=cycle)


def prc_adjoint(field: VectorField, cycle: LimitCycle, n_phases: int = DEFAULT_PRC_PHASES,
                order: int = fourier.DEFAULT_ORDER, n_steps: int | None = None,
                tol: float = 1e-8, max_periods: int = 60, return_details: bool = False):
    """Phase response curve by backward-stable adjoint integration.

    Starting from the monodromy eigenvector at theta = 0, m' = -A^T m is
    integrated backward over repeated periods (renormalized each period)
    until the period map is within ``tol``, then Z(theta) = m^T b along
    the final period.
    """
    grid = _FlowGrid(field, cycle, n_steps)
    ns = grid.n_steps
    period_idx = 2 * ns  # half-grid indices per period
    M = _variational_transits(grid, np.array([0]))[0]
    spectrum = np.linalg.eigvals(M)
    if np.min(np.abs(spectrum - 1.0)) > 1e-3:
        raise DegenerateMonodromyError("no unit Floquet multiplier at theta=0")
    m0_unit = _unit_adjoint_eigvecs(M[None])[0]
    f0 = grid.rhs0[0]
    denom = float(np.dot(m0_unit, f0))
    if abs(denom) < 1e-12 * np.linalg.norm(f0):
        raise SingularNormalizationError("m0 orthogonal to f at the base point")
    omega = cycle.omega
    m = omega / denom * m0_unit
    m_scale0 = np.linalg.norm(m)

    A = grid.A
    h = grid.h

    def backward_period(m, record=False):
        rec = np.empty((ns + 1, len(m))) if record else None
        if record:
            rec[0] = m
        g = 0
        for k in range(ns):
            A0 = A[g % period_idx].T
            A1 = A[(g - 1) % period_idx].T
            A2 = A[(g - 2) % period_idx].T
            k1 = -A0 @ m
            k2 = -A1 @ (m - 0.5 * h * k1)
            k3 = -A1 @ (m - 0.5 * h * k2)
            k4 = -A2 @ (m - h * k3)
            m = m - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            g -= 2
            if record:
                rec[k + 1] = m
        return m, rec

    gap = np.inf
    for _ in range(max_periods):
        m_prev = m
        m, _ = backward_period(m)
        if not np.all(np.isfinite(m)) or np.linalg.norm(m) > 1e8 * m_scale0:
            raise AdjointUnstableError(
                "adjoint integration diverged; use the projection method"
            )
        m = omega / float(np.dot(m, f0)) * m
        gap = float(np.max(np.abs(m - m_prev)) / max(np.max(np.abs(m)), 1e-300))
        if gap <= tol:
            break
    else:
        raise NotConvergedError(f"adjoint period map stalled at gap {gap:.2e}")

    _, rec = backward_period(m, record=True)
    if ns % n_phases != 0:
        raise ValueError("n_phases must divide the variational step count")
    stride = ns // n_phases
    # rec[k] holds m(-k h) = m(T - k h); phase theta_i = 2*pi*i/n_phases
    ks = ns - stride * np.arange(n_phases)
    m_samples = rec[ks]
    state_idx = (2 * stride * np.arange(n_phases)) % period_idx
    b_th = grid.input_directions(state_idx)
    Z_samples = np.einsum("bi,bi->b", m_samples, b_th)
    model = PhaseModel(omega=omega, Z=fourier.fit(Z_samples, order), source=cycle)
    if return_details:
        periodicity_gap = float(np.max(np.abs(rec[ns] - rec[0])) / max(np.max(np.abs(rec[0])), 1e-300))
        return model, {"periodicity_gap": periodicity_gap, "m_samples": m_samples,
                       "period_map_gap": gap}
    return model


def liouville_check(field: VectorField, cycle: LimitCycle, n_steps: int | None = None) -> tuple[float, float]:
    """(det Phi(T), exp(int trace A dt)) for the Liouville identity."""
    grid = _FlowGrid(field, cycle, n_steps)
    M = _variational_transits(grid, np.array([0]))[0]
    traces = np.trace(grid.A[: 2 * grid.n_steps + 1], axis1=1, axis2=2)
    # Simpson on the half-step grid over one period
    w = np.ones(2 * grid.n_steps + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = (0.5 * grid.h / 3.0) * float(np.dot(w, traces))
    return float(np.linalg.det(M)), float(np.exp(integral))
