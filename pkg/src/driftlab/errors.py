"""Exception types shared across the package."""


class DriftLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(DriftLabError):
    """Operands or arguments disagree on the number of degrees of freedom."""


class CenterMismatchError(DriftLabError):
    """Binary polynomial operation on polynomials with different expansion centers."""


class OutOfDomainError(DriftLabError):
    """An action lies outside the declared domain ball."""


class SingularFrequencyError(DriftLabError):
    """The frequency map vanishes at a sample point where a direction is needed."""


class NewtonDivergenceError(DriftLabError):
    """Newton inversion of the frequency map failed to converge.

    The last iterate is attached for diagnosis.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class EmptyResonantSurfaceError(DriftLabError):
    """The resonant surface has no point inside the domain."""


class SmallnessError(DriftLabError):
    """A smallness precondition fails; carries the violated inequality."""

    def __init__(self, name, value, bound):
        super().__init__(f"smallness condition violated: {name} ({value:.6g} > {bound:.6g})")
        self.name = name
        self.value = value
        self.bound = bound


class TruncationOverflowError(DriftLabError):
    """Accumulated truncation residual exceeds the configured failure threshold."""

    def __init__(self, residual, threshold):
        super().__init__(
            f"truncation residual {residual:.6g} exceeds fail threshold {threshold:.6g}"
        )
        self.residual = residual
        self.threshold = threshold


class StepConvergenceError(DriftLabError):
    """The implicit integrator step failed to reach its fixed point."""
