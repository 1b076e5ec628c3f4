"""Exception types raised by the library."""


class SubentrainError(Exception):
    """Base class for all library errors."""


class IntegrationDivergedError(SubentrainError):
    """A trajectory left the finite domain during integration."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state encountered at step {step}")


class NoLimitCycleError(SubentrainError):
    """No repeated maxima of the first state variable were found."""


class NotConvergedError(SubentrainError):
    """An iterative computation failed to reach its tolerance."""


class InsufficientResolutionError(SubentrainError):
    """A sample grid is too coarse for the requested operation."""


class DegenerateMonodromyError(SubentrainError):
    """The monodromy spectrum has no multiplier near 1."""


class SingularNormalizationError(SubentrainError):
    """The adjoint eigenvector is orthogonal to the vector field."""


class AdjointUnstableError(SubentrainError):
    """Backward adjoint integration diverged; use the projection method."""


class EntrainmentImpossibleError(SubentrainError):
    """The phase response curve and ratio admit no locking (Lemma-1 failure)."""


class InfeasibleEnergyError(SubentrainError):
    """Requested control energy is below the entrainment minimum."""

    def __init__(self, minimum_feasible, message=None):
        self.minimum_feasible = minimum_feasible
        super().__init__(
            message
            or f"energy must exceed the minimum feasible value {minimum_feasible:.6g}"
        )


class UndefinedLimitError(SubentrainError):
    """The large-N limit constant is undefined (zero-mean PRC)."""


class NoRangeGainError(SubentrainError):
    """The self-interaction function is flat; no locking-range gain exists."""


class NoTongueError(SubentrainError):
    """Both interaction extrema vanish; no tongue boundary exists."""


class InsufficientDataError(SubentrainError):
    """A time series is too short for the requested detector."""


class InsufficientDecayError(SubentrainError):
    """Too few usable points to fit an exponential convergence rate."""


class NoBoundaryFoundError(SubentrainError):
    """Bracket expansion failed to straddle a locking boundary."""
