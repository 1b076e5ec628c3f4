"""Optimal weak-forcing waveforms for subharmonic N:M entrainment.

Pipeline: reduce a limit-cycle ODE to a phase model (natural frequency
plus phase response curve), synthesize provably optimal entrainment
waveforms from it, predict Arnold tongues, and validate everything by
direct simulation of both the phase model and the full state equations.
"""

from .fourier import FourierSeries, fit, inner
from .ode import (
    HhParameters,
    LimitCycle,
    Trajectory,
    VectorField,
    find_limit_cycle,
    hh_field,
    integrate,
)
from .phase import MonodromyResult, PhaseModel, monodromy, prc_adjoint, prc_projection
from .interaction import (
    InteractionFn,
    StructureFunctions,
    SubharmonicRatio,
    entrainment_exists,
    fixed_points,
    interaction,
    interaction_quadrature,
    structure_functions,
    y_nm,
)
from .synthesis import (
    EnsembleSolution,
    EnsembleSpec,
    FastWaveform,
    RangeWaveform,
    Waveform,
    asymptotic_constant,
    ensemble_waveform,
    fast_waveform,
    max_range_waveform,
    min_energy_single,
)
from .arnold import TongueBoundary, ensemble_tongue, single_tongue
from .simharness import (
    EntrainmentVerdict,
    RateEstimate,
    detect_entrainment_phase,
    detect_entrainment_state,
    integrate_phase,
    min_power_bisection,
    rate_phase,
    rate_state,
    tongue_sweep,
)

__version__ = "0.1.0"
