"""Finite Fourier-series algebra for 2*pi-periodic quantities.

Series follow the convention

    f(theta) = a0/2 + sum_n a_n cos(n theta) + sum_n b_n sin(n theta),

and every operation here is exact in coefficient space.  The averaging
inner product <f g> = (1/2pi) int f g dtheta reduces to a finite sum of
coefficient products, which is what makes the downstream waveform
synthesis closed-form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientResolutionError

DEFAULT_ORDER = 64
TRUNCATION_RELATIVE = 1e-12


@dataclass(frozen=True, eq=False)
class FourierSeries:
    """Immutable finite trigonometric series on [0, 2*pi)."""

    a0: float
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        if a.ndim != 1 or b.ndim != 1 or len(a) != len(b):
            raise ValueError("cosine and sine coefficient arrays must be 1-d and equal length")
        if not (np.isfinite(self.a0) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite Fourier coefficient")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def order(self) -> int:
        return len(self.a)

    def __call__(self, theta):
        return self.eval(theta)

    def eval(self, theta):
        """Evaluate the series at scalar or array phase ``theta``."""
        th = np.asarray(theta, dtype=float)
        out = np.full(th.shape, 0.5 * self.a0)
        if self.order:
            n = np.arange(1, self.order + 1)
            ang = np.multiply.outer(th, n)
            out = out + np.cos(ang) @ self.a + np.sin(ang) @ self.b
        return float(out) if np.isscalar(theta) or th.ndim == 0 else out

    def derivative(self) -> "FourierSeries":
        """d/dtheta in coefficient space: (a_n, b_n) -> (n b_n, -n a_n)."""
        n = np.arange(1, self.order + 1)
        return FourierSeries(0.0, n * self.b, -n * self.a)

    def shift(self, delta: float) -> "FourierSeries":
        """Return g with g(theta) = f(theta + delta)."""
        n = np.arange(1, self.order + 1)
        c, s = np.cos(n * delta), np.sin(n * delta)
        return FourierSeries(self.a0, self.a * c + self.b * s, self.b * c - self.a * s)

    def scale(self, c: float) -> "FourierSeries":
        return FourierSeries(c * self.a0, c * self.a, c * self.b)

    def add(self, other: "FourierSeries") -> "FourierSeries":
        n = max(self.order, other.order)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.order] += self.a
        b[: self.order] += self.b
        a[: other.order] += other.a
        b[: other.order] += other.b
        return FourierSeries(self.a0 + other.a0, a, b)

    def energy(self) -> float:
        """<f^2>, the mean of f squared over one period."""
        return inner(self, self)

    def rms(self) -> float:
        return float(np.sqrt(max(self.energy(), 0.0)))

    def truncated(self, order: int) -> "FourierSeries":
        """Drop harmonics above ``order`` (pad with zeros if higher)."""
        a = np.zeros(order)
        b = np.zeros(order)
        k = min(order, self.order)
        a[:k] = self.a[:k]
        b[:k] = self.b[:k]
        return FourierSeries(self.a0, a, b)

    def to_dict(self) -> dict:
        return {"a0": self.a0, "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FourierSeries":
        return cls(float(d["a0"]), np.asarray(d["a"], dtype=float), np.asarray(d["b"], dtype=float))

    @classmethod
    def zero(cls) -> "FourierSeries":
        return cls(0.0, np.zeros(0), np.zeros(0))


def fit(samples, order: int = DEFAULT_ORDER) -> FourierSeries:
    """Project uniform-grid samples onto a series of the given order.

    ``samples[k]`` is the value at theta_k = 2*pi*k/len(samples).  The grid
    must contain at least ``2*order + 1`` points, otherwise the projection
    aliases.  Coefficients below ``1e-12 * max|samples|`` are zeroed.
    """
    y = np.asarray(samples, dtype=float)
    if y.ndim != 1:
        raise ValueError("samples must be a 1-d array")
    L = len(y)
    if L < 2 * order + 1:
        raise InsufficientResolutionError(
            f"grid of {L} points cannot resolve order {order} (need >= {2 * order + 1})"
        )
    F = np.fft.rfft(y)
    a0 = 2.0 * F[0].real / L
    a = 2.0 * F[1 : order + 1].real / L
    b = -2.0 * F[1 : order + 1].imag / L
    tol = TRUNCATION_RELATIVE * max(np.max(np.abs(y)), 1e-300)
    a[np.abs(a) < tol] = 0.0
    b[np.abs(b) < tol] = 0.0
    if abs(a0) < tol:
        a0 = 0.0
    return FourierSeries(a0, a, b)


def inner(f: FourierSeries, g: FourierSeries) -> float:
    """Averaging inner product <f g> = (1/2pi) int_0^2pi f g dtheta.

    In coefficients: a0_f a0_g / 4 + (1/2) sum_n (a_n^f a_n^g + b_n^f b_n^g).
    """
    n = min(f.order, g.order)
    acc = 0.25 * f.a0 * g.a0
    if n:
        acc += 0.5 * (np.dot(f.a[:n], g.a[:n]) + np.dot(f.b[:n], g.b[:n]))
    return float(acc)


def energy(f: FourierSeries) -> float:
    return f.energy()


def rms(f: FourierSeries) -> float:
    return f.rms()


def sample_grid(n: int) -> np.ndarray:
    """Uniform phase grid of n points on [0, 2*pi)."""
    return np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
