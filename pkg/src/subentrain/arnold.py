"""Linear Arnold-tongue boundary estimates for weak forcing.

Boundary lines come from dw + P * Lambda_unit(phi) = 0 solved at the two
interaction extrema.  The branch through phi_plus is reported as the
left column, the branch through phi_minus as the right column (matching
the ensemble-tongue convention); negative powers mean the branch does
not bound that side and are recorded as absent.  The sign pattern of
(Lambda(phi_minus), Lambda(phi_plus)) classifies the tongue: case A
(both positive, tongue right of the tip), B (straddling zero, two
sided), C (both negative, left of the tip).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoTongueError
from .fourier import FourierSeries
from .interaction import InteractionFn, SubharmonicRatio, interaction
from .phase import PhaseModel

_ZERO_EXTREME = 1e-14
DEFAULT_SPAN = 0.10
DEFAULT_POINTS = 101


@dataclass(frozen=True, eq=False)
class TongueBoundary:
    """Per-abscissa minimum-power boundary values; NaN marks an absent side."""

    axis: str                       # "forcing-frequency" or "natural-frequency"
    abscissas: np.ndarray
    p_left: np.ndarray              # branch through phi_plus
    p_right: np.ndarray             # branch through phi_minus
    case: str                       # "A", "B", or "C"
    ratio: SubharmonicRatio
    label: str = "theory"
    waveform_digest: Optional[str] = None

    @property
    def points(self):
        """List of (abscissa, P_left or None, P_right or None)."""
        out = []
        for x, l, r in zip(self.abscissas, self.p_left, self.p_right):
            out.append((float(x),
                        None if np.isnan(l) else float(l),
                        None if np.isnan(r) else float(r)))
        return out

    def p_min(self) -> np.ndarray:
        """Lower boundary: the smaller present branch per abscissa."""
        both = np.stack([self.p_left, self.p_right])
        with np.errstate(invalid="ignore"):
            out = np.nanmin(both, axis=0)
        return out


def _classify(lam_minus: float, lam_plus: float) -> str:
    if lam_minus > 0.0:
        return "A"
    if lam_plus < 0.0:
        return "C"
    return "B"


def _unit_interaction(model: PhaseModel, ratio: SubharmonicRatio,
                      vtilde: FourierSeries) -> InteractionFn:
    if abs(vtilde.energy() - 1.0) > 1e-10:
        raise ValueError("waveform shape must be normalized to unit energy")
    lam = interaction(model.Z, vtilde, ratio)
    if abs(lam.lambda_max) < _ZERO_EXTREME and abs(lam.lambda_min) < _ZERO_EXTREME:
        raise NoTongueError(
            f"interaction of this waveform with the PRC vanishes for ratio {ratio}"
        )
    return lam


def _branch_powers(detunings: np.ndarray, lam: InteractionFn):
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(abs(lam.lambda_max) < _ZERO_EXTREME, np.nan,
                        -detunings / lam.lambda_max)
        right = np.where(abs(lam.lambda_min) < _ZERO_EXTREME, np.nan,
                         -detunings / lam.lambda_min)
    left = np.where(left < 0.0, np.nan, left)
    right = np.where(right < 0.0, np.nan, right)
    return left, right


def single_tongue(model: PhaseModel, ratio: SubharmonicRatio, vtilde: FourierSeries,
                  omega_f_grid, waveform_digest: Optional[str] = None) -> TongueBoundary:
    """Boundary powers over a forcing-frequency grid for one oscillator.

    Detuning at each abscissa is dw = omega - (M/N) * Omega_f.
    """
    lam = _unit_interaction(model, ratio, vtilde)
    grid = np.asarray(omega_f_grid, dtype=float)
    dw = model.omega - (ratio.M / ratio.N) * grid
    left, right = _branch_powers(dw, lam)
    return TongueBoundary(axis="forcing-frequency", abscissas=grid,
                          p_left=left, p_right=right,
                          case=_classify(lam.lambda_min, lam.lambda_max),
                          ratio=ratio, waveform_digest=waveform_digest)


def ensemble_tongue(model: PhaseModel, ratio: SubharmonicRatio, vtilde: FourierSeries,
                    omega_target: float, omega_grid,
                    waveform_digest: Optional[str] = None) -> TongueBoundary:
    """Boundary powers over a natural-frequency grid at fixed forcing.

    P(omega) = (Omega - omega) / Lambda(phi_plus) on the left branch and
    (Omega - omega) / Lambda(phi_minus) on the right branch.
    """
    lam = _unit_interaction(model, ratio, vtilde)
    grid = np.asarray(omega_grid, dtype=float)
    dw = grid - omega_target  # (Omega - omega) = -dw
    left, right = _branch_powers(dw, lam)
    return TongueBoundary(axis="natural-frequency", abscissas=grid,
                          p_left=left, p_right=right,
                          case=_classify(lam.lambda_min, lam.lambda_max),
                          ratio=ratio, waveform_digest=waveform_digest)


def default_forcing_grid(model: PhaseModel, ratio: SubharmonicRatio,
                         span: float = DEFAULT_SPAN, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Abscissas spanning +-span around (N/M) * omega."""
    center = ratio.N / ratio.M * model.omega
    return center * np.linspace(1.0 - span, 1.0 + span, points)


def default_natural_grid(omega_target: float, span: float = DEFAULT_SPAN,
                         points: int = DEFAULT_POINTS) -> np.ndarray:
    return omega_target * np.linspace(1.0 - span, 1.0 + span, points)
