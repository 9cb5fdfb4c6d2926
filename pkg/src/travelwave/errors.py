"""Exception hierarchy.

Hypothesis violations (bad problem data) and solver failures are kept apart so
the CLI can map them onto distinct exit codes.
"""


class TravelWaveError(Exception):
    """Base class for every error raised by this package."""


class HypothesisViolation(TravelWaveError, ValueError):
    """The problem data does not satisfy the standing sign/positivity hypotheses."""


class NonPositiveDiffusion(HypothesisViolation):
    pass


class SignStructureViolation(HypothesisViolation):
    pass


class HypothesisGFails(HypothesisViolation):
    pass


class NegativeG1(HypothesisViolation):
    pass


class SolverError(TravelWaveError, RuntimeError):
    """Numerical machinery failed to produce a trustworthy answer."""


class QuadratureFailure(SolverError):
    pass


class PoorFit(SolverError):
    """Endpoint power-law fit is unusable; ``exponents`` holds the rejected fit."""

    def __init__(self, message, exponents=None):
        super().__init__(message)
        self.exponents = exponents


class StepSizeCollapse(SolverError):
    pass


class NonPositiveStart(SolverError):
    pass


class PrematureCrossing(SolverError):
    pass


class BracketExhausted(SolverError):
    pass


class NonConvergent(SolverError):
    pass


class SingularQuadratureFailure(SolverError):
    pass


class ProfileNotPositive(SolverError):
    pass


class ExponentUnavailable(TravelWaveError):
    pass
