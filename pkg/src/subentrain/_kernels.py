"""Numba kernels for the hot integration loops.

Everything here is a plain function of its arguments so the compiled
code can be cached across processes.  Hodgkin-Huxley parameters travel
as a flat vector ``p = [V_Na, V_K, V_L, g_Na, g_K, g_L, I_b, c]``;
periodic signals travel as Fourier coefficient arrays.
"""

import numpy as np
from numba import njit

HH_PARAM_ORDER = ("V_Na", "V_K", "V_L", "g_Na", "g_K", "g_L", "I_b", "c")


@njit(cache=True, inline="always")
def _fourier_eval(a0, a, b, theta):
    out = 0.5 * a0
    for n in range(len(a)):
        out += a[n] * np.cos((n + 1) * theta) + b[n] * np.sin((n + 1) * theta)
    return out


@njit(cache=True, inline="always")
def _hh_rhs(x, u, p):
    V = x[0]
    m = x[1]
    h = x[2]
    n = x[3]
    a_m = 0.1 * (V + 40.0) / (1.0 - np.exp(-(V + 40.0) / 10.0))
    b_m = 4.0 * np.exp(-(V + 65.0) / 18.0)
    a_h = 0.07 * np.exp(-(V + 65.0) / 20.0)
    b_h = 1.0 / (1.0 + np.exp(-(V + 35.0) / 10.0))
    a_n = 0.01 * (V + 55.0) / (1.0 - np.exp(-(V + 55.0) / 10.0))
    b_n = 0.125 * np.exp(-(V + 65.0) / 80.0)
    out = np.empty(4)
    out[0] = (
        p[6]
        + u
        - p[3] * h * (V - p[0]) * m ** 3
        - p[4] * (V - p[1]) * n ** 4
        - p[5] * (V - p[2])
    ) / p[7]
    out[1] = a_m * (1.0 - m) - b_m * m
    out[2] = a_h * (1.0 - h) - b_h * h
    out[3] = a_n * (1.0 - n) - b_n * n
    return out


@njit(cache=True, nogil=True)
def hh_march(x0, p, dt, steps):
    """Autonomous RK4 march; returns the full (steps+1, 4) trajectory."""
    traj = np.empty((steps + 1, 4))
    traj[0] = x0
    x = x0.copy()
    for k in range(steps):
        k1 = _hh_rhs(x, 0.0, p)
        k2 = _hh_rhs(x + 0.5 * dt * k1, 0.0, p)
        k3 = _hh_rhs(x + 0.5 * dt * k2, 0.0, p)
        k4 = _hh_rhs(x + dt * k3, 0.0, p)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[k + 1] = x
    return traj


@njit(cache=True, nogil=True)
def hh_march_forced_v(x0, p, dt, steps, c0, c, d, omega_f):
    """Forced RK4 march with u(t) = v(omega_f t); records the V trace.

    Returns (V trace of length steps+1, final state).  Raises no Python
    exceptions; a non-finite V is left in the trace for the caller to
    detect.
    """
    trace = np.empty(steps + 1)
    trace[0] = x0[0]
    x = x0.copy()
    t = 0.0
    for k in range(steps):
        u1 = _fourier_eval(c0, c, d, omega_f * t)
        u2 = _fourier_eval(c0, c, d, omega_f * (t + 0.5 * dt))
        u4 = _fourier_eval(c0, c, d, omega_f * (t + dt))
        k1 = _hh_rhs(x, u1, p)
        k2 = _hh_rhs(x + 0.5 * dt * k1, u2, p)
        k3 = _hh_rhs(x + 0.5 * dt * k2, u2, p)
        k4 = _hh_rhs(x + dt * k3, u4, p)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (k + 1) * dt
        trace[k + 1] = x[0]
    return trace, x


@njit(cache=True, nogil=True)
def phase_march(psi0, omega, za0, za, zb, c0, c, d, omega_f, dt, steps, stride):
    """RK4 on psi' = omega + Z(psi) v(omega_f t); samples every ``stride`` steps."""
    n_rec = steps // stride + 1
    out = np.empty(n_rec)
    out[0] = psi0
    psi = psi0
    t = 0.0
    idx = 1
    for k in range(steps):
        u1 = _fourier_eval(c0, c, d, omega_f * t)
        um = _fourier_eval(c0, c, d, omega_f * (t + 0.5 * dt))
        u4 = _fourier_eval(c0, c, d, omega_f * (t + dt))
        k1 = omega + _fourier_eval(za0, za, zb, psi) * u1
        k2 = omega + _fourier_eval(za0, za, zb, psi + 0.5 * dt * k1) * um
        k3 = omega + _fourier_eval(za0, za, zb, psi + 0.5 * dt * k2) * um
        k4 = omega + _fourier_eval(za0, za, zb, psi + dt * k3) * u4
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (k + 1) * dt
        if (k + 1) % stride == 0:
            out[idx] = psi
            idx += 1
    return out
