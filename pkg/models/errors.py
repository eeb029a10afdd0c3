"""
Exception hierarchy

Every error carries the exit code the command line maps it to.
"""
from typing import Optional


class RDLensError(Exception):
    """Base class for all library errors"""
    exit_code = 1


class InvalidDistribution(RDLensError, ValueError):
    """Probabilities are negative, non-finite, or do not sum to one"""


class DimensionMismatch(RDLensError, ValueError):
    """Alphabet sizes of two operands disagree"""


class AbsoluteContinuityViolation(RDLensError, ValueError):
    """p places mass where q has none"""


class InvalidGeometry(RDLensError, ValueError):
    """Toy process geometry cannot be discretized"""


class BracketFailure(RDLensError):
    """Calibration bracket does not straddle the target"""
    exit_code = 2

    def __init__(self, message: str, low_mi: float, high_mi: float):
        super().__init__(message)
        self.low_mi = low_mi
        self.high_mi = high_mi


class NonFiniteLoss(RDLensError):
    """Objective is not finite at the evaluation point"""
    exit_code = 3


class DivergedLoss(RDLensError):
    """Training produced a non-finite loss or parameter"""
    exit_code = 3

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class SchemaMismatch(RDLensError):
    """File schema tag is missing or not the expected version"""
    exit_code = 4


class InvariantViolation(RDLensError):
    """A bound that holds by construction was violated"""
    exit_code = 5
