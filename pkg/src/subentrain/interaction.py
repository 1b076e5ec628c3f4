"""Averaged interaction structure of a PRC with subharmonic forcing.

For coprime N:M, the interaction of Z with a forcing waveform v is

    Lambda(phi) = <Z(M theta + phi) v(N theta)>.

In Fourier space the only surviving pairings couple Z-harmonic N*k with
v-harmonic M*k, so Lambda is a finite series supported on harmonics
N*k of phi (hence 2*pi/N periodic).  A trapezoid quadrature of the
defining integral is kept alongside as the independent oracle for the
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import FourierSeries
from .errors import SubentrainError

EXTREMUM_GRID = 4096
EXTREMUM_TOL = 1e-10
LEMMA1_TOL = 1e-12


@dataclass(frozen=True)
class SubharmonicRatio:
    """N control cycles per M oscillator cycles; N and M must be coprime."""

    N: int
    M: int

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ValueError("N and M must be positive integers")
        if math.gcd(self.N, self.M) != 1:
            raise ValueError(f"{self.N}:{self.M} is not coprime; reduce it explicitly")

    def forcing_frequency(self, omega_target: float) -> float:
        return self.N / self.M * omega_target

    def __str__(self):
        return f"{self.N}:{self.M}"


@dataclass(frozen=True, eq=False)
class StructureFunctions:
    """Q, V, K, S and their extrema for one PRC and ratio."""

    ratio: SubharmonicRatio
    Q: FourierSeries
    V: FourierSeries
    K: FourierSeries
    S: FourierSeries
    V0: float
    V_star: float
    phi_star: float
    S0: float
    S_star: float


@dataclass(frozen=True, eq=False)
class InteractionFn:
    """Lambda with its extremal phases on [0, 2*pi/N)."""

    series: FourierSeries
    ratio: SubharmonicRatio
    phi_plus: float
    phi_minus: float
    lambda_max: float
    lambda_min: float

    def __call__(self, phi):
        return self.series.eval(phi)


def _scaled_sum_filter(f: FourierSeries, N: int) -> FourierSeries:
    """(1/N) sum_j f(2*pi*M*j/N + phi) in coefficients: keep harmonics N | n."""
    a = np.zeros(f.order)
    b = np.zeros(f.order)
    idx = np.arange(N, f.order + 1, N) - 1
    a[idx] = f.a[idx]
    b[idx] = f.b[idx]
    return FourierSeries(f.a0, a, b)


def y_nm(Z: FourierSeries, ratio: SubharmonicRatio, phi: float = 0.0) -> FourierSeries:
    """Y(eta, phi) = (1/N) sum_j Z((M/N)(2*pi*j + eta) + phi) as a series in eta.

    Z-harmonic N*k survives the sum and lands on eta-harmonic M*k,
    rotated by the angle N*k*phi.
    """
    N, M = ratio.N, ratio.M
    kmax = Z.order // N
    out_order = M * kmax
    a = np.zeros(out_order)
    b = np.zeros(out_order)
    for k in range(1, kmax + 1):
        az, bz = Z.a[N * k - 1], Z.b[N * k - 1]
        c, s = np.cos(N * k * phi), np.sin(N * k * phi)
        a[M * k - 1] = az * c + bz * s
        b[M * k - 1] = bz * c - az * s
    return FourierSeries(Z.a0, a, b)


def y_nm_direct(Z: FourierSeries, ratio: SubharmonicRatio, phi: float, etas) -> np.ndarray:
    """Direct evaluation of the defining sum; oracle for :func:`y_nm`."""
    N, M = ratio.N, ratio.M
    etas = np.asarray(etas, dtype=float)
    acc = np.zeros_like(etas)
    for j in range(N):
        acc += Z.eval(M / N * (2.0 * np.pi * j + etas) + phi)
    return acc / N


def autocorrelation(Z: FourierSeries) -> FourierSeries:
    """Q(phi) = <Z(theta + phi) Z(theta)>; even, maximal at 0."""
    a = 0.5 * (Z.a ** 2 + Z.b ** 2)
    return FourierSeries(0.5 * Z.a0 ** 2, a, np.zeros(Z.order))


def _golden_refine(fun, lo: float, hi: float, tol: float, maximize: bool) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    sign = -1.0 if maximize else 1.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = sign * fun(c), sign * fun(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = sign * fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = sign * fun(d)
    return 0.5 * (lo + hi)


def _extremum(series: FourierSeries, N: int, maximize: bool,
              grid: int = EXTREMUM_GRID, tol: float = EXTREMUM_TOL) -> tuple[float, float]:
    """(phi, value) of the extremum, phi reduced to [0, 2*pi/N)."""
    phis = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    vals = series.eval(phis)
    k = int(np.argmax(vals) if maximize else np.argmin(vals))
    span = 2.0 * np.pi / grid
    phi = _golden_refine(series.eval, phis[k] - span, phis[k] + span, tol, maximize)
    phi %= 2.0 * np.pi / N
    return phi, float(series.eval(phi))


def structure_functions(Z: FourierSeries, ratio: SubharmonicRatio) -> StructureFunctions:
    """All averaged structure functions of Z for one subharmonic ratio."""
    N = ratio.N
    Q = autocorrelation(Z)
    V = _scaled_sum_filter(Q, N)
    K = autocorrelation(Z.derivative())
    S = _scaled_sum_filter(K, N)
    phi_star, V_star = _extremum(V, N, maximize=False)
    _, S_star = _extremum(S, N, maximize=False)
    return StructureFunctions(
        ratio=ratio, Q=Q, V=V, K=K, S=S,
        V0=float(V.eval(0.0)), V_star=V_star, phi_star=phi_star,
        S0=float(S.eval(0.0)), S_star=S_star,
    )


def interaction(Z: FourierSeries, v: FourierSeries, ratio: SubharmonicRatio) -> InteractionFn:
    """Closed-form Lambda(phi) = <Z(M theta + phi) v(N theta)> with extrema.

    Pairing: Lambda = a0 c0 / 4
      + (1/2) sum_k (a_{Nk} c_{Mk} + b_{Nk} d_{Mk}) cos(N k phi)
      + (1/2) sum_k (b_{Nk} c_{Mk} - a_{Nk} d_{Mk}) sin(N k phi),
    validated against :func:`interaction_quadrature`.
    """
    N, M = ratio.N, ratio.M
    kmax = min(Z.order // N, v.order // M)
    order = N * kmax
    a = np.zeros(order)
    b = np.zeros(order)
    for k in range(1, kmax + 1):
        az, bz = Z.a[N * k - 1], Z.b[N * k - 1]
        cv, dv = v.a[M * k - 1], v.b[M * k - 1]
        a[N * k - 1] = 0.5 * (az * cv + bz * dv)
        b[N * k - 1] = 0.5 * (bz * cv - az * dv)
    series = FourierSeries(0.5 * Z.a0 * v.a0, a, b)
    phi_plus, lam_max = _extremum(series, N, maximize=True)
    phi_minus, lam_min = _extremum(series, N, maximize=False)
    return InteractionFn(series=series, ratio=ratio, phi_plus=phi_plus,
                         phi_minus=phi_minus, lambda_max=lam_max, lambda_min=lam_min)


def interaction_quadrature(Z: FourierSeries, v: FourierSeries, ratio: SubharmonicRatio,
                           grid: int = 8192, n_phi: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid quadrature of the defining integral on a uniform phi grid.

    Returns (phis, values) with n_phi points; ``grid`` integration nodes
    (at least 2048, and a multiple of n_phi so shifted evaluations stay
    on the node grid).  Serves as the independent oracle for
    :func:`interaction`.
    """
    if grid < 2048:
        raise ValueError("quadrature grid must have at least 2048 points")
    if grid % n_phi != 0:
        raise ValueError("grid must be a multiple of n_phi")
    N, M = ratio.N, ratio.M
    thetas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    Ztab = Z.eval(thetas)
    vN = v.eval((N * thetas) % (2.0 * np.pi))
    zidx = (M * np.arange(grid)) % grid
    step = grid // n_phi
    vals = np.empty(n_phi)
    for p in range(n_phi):
        vals[p] = np.dot(Ztab[(zidx + p * step) % grid], vN) / grid
    return np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False), vals


def interaction_quadrature_at(Z: FourierSeries, v: FourierSeries, ratio: SubharmonicRatio,
                              phi: float, grid: int = 8192) -> float:
    """Quadrature value of Lambda at one arbitrary phi."""
    N, M = ratio.N, ratio.M
    thetas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    return float(np.mean(Z.eval(M * thetas + phi) * v.eval(N * thetas)))


def entrainment_exists(Z: FourierSeries, v: FourierSeries, ratio: SubharmonicRatio,
                       tol: float = LEMMA1_TOL) -> bool:
    """Lemma-1 existence test: some harmonic pairing above tol survives.

    The constant term a0 c0 / 4 does not count; a flat Lambda cannot pin
    a locking phase.
    """
    lam = interaction(Z, v, ratio).series
    return bool(np.any(np.abs(lam.a) > tol) or np.any(np.abs(lam.b) > tol))


def fixed_points(lam: InteractionFn, delta_omega: float,
                 grid: int = EXTREMUM_GRID, tol: float = EXTREMUM_TOL):
    """Roots of delta_omega + Lambda(phi) = 0 on [0, 2*pi) with stability.

    Returns (stable, unstable) phase lists; stability is the sign of
    Lambda'(root).  Empty lists mean no entrainment at this detuning.
    """
    series = lam.series
    dseries = series.derivative()
    phis = np.linspace(0.0, 2.0 * np.pi, grid + 1)
    vals = delta_omega + series.eval(phis)
    stable, unstable = [], []
    for k in range(grid):
        f0, f1 = vals[k], vals[k + 1]
        if f0 == 0.0:
            root = phis[k]
        elif f0 * f1 < 0.0:
            lo, hi = phis[k], phis[k + 1]
            flo = f0
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = delta_omega + series.eval(mid)
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            root = 0.5 * (lo + hi)
        else:
            continue
        (stable if dseries.eval(root) < 0.0 else unstable).append(root % (2.0 * np.pi))
    return sorted(stable), sorted(unstable)
