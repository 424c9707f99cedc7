"""
Exception hierarchy for fibration checks.

Every error carries the CLI exit code it maps to, so drivers can translate
failures without a lookup table.
"""

from typing import Iterable, Optional, Tuple


class FibrationError(Exception):
    """Base class for all library errors."""

    exit_code = 1
    point: Optional[Tuple[float, ...]] = None

    def at_point(self, point: Iterable[float]) -> "FibrationError":
        """Record the S^3 point being processed when the error was raised."""
        self.point = tuple(float(v) for v in point)
        return self

    def __str__(self) -> str:
        message = super().__str__()
        if self.point is None:
            return message
        return f"{message} at point ({', '.join('%.12g' % v for v in self.point)})"


class DegenerateInputError(FibrationError, ValueError):
    """Input too close to zero (or non-finite) to normalize."""

    exit_code = 3


class InvalidCircleError(DegenerateInputError):
    """Basis (P, Q) is not orthonormal."""


class InvalidGrassmannPointError(FibrationError):
    """Eigenspace of v -> m v conj(n) is not 2-dimensional."""

    exit_code = 3


class NonContractionError(FibrationError):
    """Fixed-point iteration did not converge within max_iter."""

    exit_code = 3

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ChartDomainError(FibrationError, ValueError):
    """Chart point outside the disk x^2 + y^2 < epsilon."""

    exit_code = 3


class SingularDifferentialError(FibrationError):
    """|Delta| too small: d(pi_1) is not invertible."""

    exit_code = 3


class InternalConsistencyError(FibrationError):
    """Two independent evaluations of the same quantity disagree."""

    exit_code = 3


class DeformationDomainError(FibrationError):
    """Image of phi leaves the pi/2 cap around the deformation target."""

    exit_code = 4


class DeformationValidityError(FibrationError):
    """A deformation step is no longer strictly distance-decreasing."""

    exit_code = 4

    def __init__(self, message: str, t: float, lipschitz: float):
        super().__init__(message)
        self.t = t
        self.lipschitz = lipschitz


class NoHemisphereError(FibrationError):
    """Point set is not contained in any open hemisphere."""

    exit_code = 3


class InvariantFailure(FibrationError):
    """A sampled implication that must always hold was violated."""

    exit_code = 1


class SpecFileError(FibrationError):
    """Spec file missing, malformed or rejected by validation."""

    exit_code = 2


class PlotOutputError(FibrationError):
    """Plot output path could not be written."""

    exit_code = 5


class InconclusiveVerdict(FibrationError):
    """Fibration margin inside the boundary band; the oracle does not judge."""

    exit_code = 6
