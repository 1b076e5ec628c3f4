"""Optimal weak-forcing waveforms for subharmonic entrainment.

Four families, all built from the shifted-PRC sum Y and the structure
functions V and S of one phase model:

* minimum-energy single-oscillator control (a rescaled Y),
* fastest-locking control of fixed energy (Y' plus a Y correction),
* minimum-energy control for a natural-frequency ensemble (Case I/II),
* maximum-locking-range control of fixed energy.

Lock-phase conventions: the free phase of the minimum-energy waveform is
dropped (Y is taken at shift 0) and the fast waveform locks at phi = 0;
entrainment is asymptotic, so only relative phase matters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    EntrainmentImpossibleError,
    InfeasibleEnergyError,
    NoRangeGainError,
    UndefinedLimitError,
)
from .fourier import FourierSeries
from .interaction import (
    InteractionFn,
    StructureFunctions,
    SubharmonicRatio,
    interaction,
    structure_functions,
    y_nm,
)
from .phase import PhaseModel

_V0_FLOOR = 1e-14
FAST_ENERGY_MARGIN = 1.2  # default P = margin * minimum feasible energy


@dataclass(frozen=True, eq=False)
class Waveform:
    """A 2*pi-periodic control v in the forcing phase eta = Omega_f * t."""

    series: FourierSeries
    forcing_frequency: float
    ratio: SubharmonicRatio
    omega_target: float
    family: str = "custom"

    def __post_init__(self):
        expect = self.ratio.forcing_frequency(self.omega_target)
        if not np.isclose(self.forcing_frequency, expect, rtol=1e-12, atol=0.0):
            raise ValueError("forcing_frequency must equal (N/M) * omega_target")

    @property
    def energy(self) -> float:
        return self.series.energy()

    @property
    def rms(self) -> float:
        return self.series.rms()

    def scaled(self, factor: float) -> "Waveform":
        return Waveform(self.series.scale(factor), self.forcing_frequency,
                        self.ratio, self.omega_target, self.family)

    def unit_energy(self) -> "Waveform":
        r = self.rms
        if r == 0.0:
            raise ValueError("cannot normalize the zero waveform")
        return self.scaled(1.0 / r)

    def to_dict(self) -> dict:
        return {
            "series": self.series.to_dict(),
            "omega_f": self.forcing_frequency,
            "ratio": [self.ratio.N, self.ratio.M],
            "omega_target": self.omega_target,
            "energy": self.energy,
            "family": self.family,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Waveform":
        return cls(
            series=FourierSeries.from_dict(d["series"]),
            forcing_frequency=float(d["omega_f"]),
            ratio=SubharmonicRatio(*d["ratio"]),
            omega_target=float(d["omega_target"]),
            family=d.get("family", "custom"),
        )


@dataclass(frozen=True)
class EnsembleSpec:
    """Natural-frequency band [omega1, omega2] to entrain to a target Omega."""

    omega1: float
    omega2: float
    omega_target: float

    def __post_init__(self):
        if self.omega1 > self.omega2:
            raise ValueError("omega1 must not exceed omega2")

    @property
    def dw1(self) -> float:
        return self.omega1 - self.omega_target

    @property
    def dw2(self) -> float:
        return self.omega2 - self.omega_target


@dataclass(frozen=True, eq=False)
class EnsembleSolution:
    waveform: Waveform
    case: str                       # "I-minus", "I-plus", or "II"
    mu_plus: float
    mu_minus: float
    omega_minus: float              # predicted locking range
    omega_plus: float
    interaction: InteractionFn


@dataclass(frozen=True, eq=False)
class FastWaveform:
    waveform: Waveform
    predicted_rate: float           # dLambda/dphi at the locking phase
    multiplier: float               # Euler-Lagrange lambda < 0


@dataclass(frozen=True, eq=False)
class RangeWaveform:
    waveform: Waveform
    predicted_width: float          # Lambda_max - Lambda_min


def min_energy_single(model: PhaseModel, ratio: SubharmonicRatio, omega_target: float,
                      sf: Optional[StructureFunctions] = None) -> Waveform:
    """Minimum-energy waveform v = -(dw/V0) Y entraining one oscillator.

    Energy comes out as dw^2 / V0; for N = M = 1 this is a rescaled PRC.
    Zero detuning returns the zero waveform.
    """
    dw = model.omega - omega_target
    omega_f = ratio.forcing_frequency(omega_target)
    if dw == 0.0:
        return Waveform(FourierSeries.zero(), omega_f, ratio, omega_target, "min-energy")
    if sf is None:
        sf = structure_functions(model.Z, ratio)
    if sf.V0 < _V0_FLOOR:
        raise EntrainmentImpossibleError(
            f"V0 vanishes for ratio {ratio}; no harmonic pairing carries the detuning"
        )
    series = y_nm(model.Z, ratio).scale(-dw / sf.V0)
    return Waveform(series, omega_f, ratio, omega_target, "min-energy")


def asymptotic_constant(model: PhaseModel, omega_target: float) -> float:
    """Large-N limit of the minimum-energy control: -2 dw / a0.

    Equals -dw * (integral of Z) / (integral of Q) evaluated in
    coefficients; undefined for a zero-mean PRC.
    """
    a0 = model.Z.a0
    if a0 == 0.0:
        raise UndefinedLimitError("PRC has zero mean; the large-N limit is undefined")
    return -2.0 * (model.omega - omega_target) / a0


def fast_waveform(model: PhaseModel, ratio: SubharmonicRatio, omega_target: float,
                  power: Optional[float] = None,
                  sf: Optional[StructureFunctions] = None) -> FastWaveform:
    """Fixed-energy waveform maximizing the locking slope at phi = 0.

    v = Y'/(2 lambda) - (dw/V0) Y with lambda = -(1/2) sqrt(S0/(P - dw^2/V0)).
    Requires P strictly above the minimum feasible energy dw^2/V0.
    """
    dw = model.omega - omega_target
    if sf is None:
        sf = structure_functions(model.Z, ratio)
    if sf.V0 < _V0_FLOOR:
        raise EntrainmentImpossibleError(f"V0 vanishes for ratio {ratio}")
    p_min = dw * dw / sf.V0
    if power is None:
        if p_min == 0.0:
            raise InfeasibleEnergyError(0.0, "zero detuning: an explicit energy is required")
        power = FAST_ENERGY_MARGIN * p_min
    if power <= p_min:
        raise InfeasibleEnergyError(p_min)
    lam = -0.5 * np.sqrt(sf.S0 / (power - p_min))
    series = y_nm(model.Z.derivative(), ratio).scale(1.0 / (2.0 * lam)).add(
        y_nm(model.Z, ratio).scale(-dw / sf.V0)
    )
    wf = Waveform(series, ratio.forcing_frequency(omega_target), ratio,
                  omega_target, "fast")
    rate = sf.S0 / (2.0 * lam)
    return FastWaveform(waveform=wf, predicted_rate=rate, multiplier=float(lam))


def ensemble_waveform(model: PhaseModel, ratio: SubharmonicRatio, spec: EnsembleSpec,
                      sf: Optional[StructureFunctions] = None) -> EnsembleSolution:
    """Minimum-energy waveform entraining every frequency in the band.

    Case I applies when one boundary constraint alone suffices (the
    single-oscillator waveform at the far edge of the band); otherwise
    both constraints are active and the Case II two-term combination of
    shifted Y functions is optimal.  Boundary ties resolve to Case I.
    """
    if sf is None:
        sf = structure_functions(model.Z, ratio)
    if sf.V0 < _V0_FLOOR:
        raise EntrainmentImpossibleError(f"V0 vanishes for ratio {ratio}")
    V0, Vs = sf.V0, sf.V_star
    dw1, dw2 = spec.dw1, spec.dw2
    omega_f = ratio.forcing_frequency(spec.omega_target)
    Y0 = y_nm(model.Z, ratio)

    if dw2 <= dw1 * Vs / V0:
        case = "I-plus"
        mu_plus, mu_minus = 2.0 * dw1 / V0, 0.0
        series = Y0.scale(-dw1 / V0)
    elif dw1 >= dw2 * Vs / V0:
        case = "I-minus"
        mu_plus, mu_minus = 0.0, -2.0 * dw2 / V0
        series = Y0.scale(-dw2 / V0)
    else:
        if V0 - Vs < _V0_FLOOR:
            raise EntrainmentImpossibleError("flat V: Case II solution is degenerate")
        case = "II"
        denom = (V0 - Vs) * (V0 + Vs)
        mu_plus = 2.0 * (dw1 * V0 - dw2 * Vs) / denom
        mu_minus = 2.0 * (dw1 * Vs - dw2 * V0) / denom
        series = y_nm(model.Z, ratio, sf.phi_star).scale(-0.5 * mu_plus).add(
            Y0.scale(0.5 * mu_minus)
        )
    wf = Waveform(series, omega_f, ratio, spec.omega_target, "ensemble")
    lam = interaction(model.Z, series, ratio)
    omega_plus = spec.omega_target - lam.lambda_min
    omega_minus = spec.omega_target - lam.lambda_max
    return EnsembleSolution(waveform=wf, case=case, mu_plus=float(mu_plus),
                            mu_minus=float(mu_minus), omega_minus=float(omega_minus),
                            omega_plus=float(omega_plus), interaction=lam)


def ensemble_energy(sf: StructureFunctions, spec: EnsembleSpec) -> float:
    """Closed-form energy of the ensemble solution, branch-wise."""
    V0, Vs = sf.V0, sf.V_star
    dw1, dw2 = spec.dw1, spec.dw2
    if dw2 <= dw1 * Vs / V0:
        return dw1 * dw1 / V0
    if dw1 >= dw2 * Vs / V0:
        return dw2 * dw2 / V0
    return ((dw1 * dw1 + dw2 * dw2) * V0 - 2.0 * dw1 * dw2 * Vs) / ((V0 - Vs) * (V0 + Vs))


def max_range_waveform(model: PhaseModel, ratio: SubharmonicRatio, power: float,
                       omega_target: Optional[float] = None,
                       sf: Optional[StructureFunctions] = None) -> RangeWaveform:
    """Fixed-energy waveform with the widest locking range.

    v = sqrt(P / (2 (V0 - V*))) [Y(., phi*) - Y(., 0)], predicted width
    sqrt(2 P (V0 - V*)).  This is the symmetric-band special case of the
    ensemble solution.
    """
    if power <= 0.0:
        raise ValueError("power must be positive")
    if omega_target is None:
        omega_target = model.omega
    if sf is None:
        sf = structure_functions(model.Z, ratio)
    gap = sf.V0 - sf.V_star
    if gap < _V0_FLOOR:
        raise NoRangeGainError("V is flat; every waveform has zero locking range gain")
    amp = np.sqrt(power / (2.0 * gap))
    series = y_nm(model.Z, ratio, sf.phi_star).add(y_nm(model.Z, ratio).scale(-1.0)).scale(amp)
    wf = Waveform(series, ratio.forcing_frequency(omega_target), ratio,
                  omega_target, "max-range")
    return RangeWaveform(waveform=wf, predicted_width=float(np.sqrt(2.0 * power * gap)))
