"""
Error Types
===========

Every failure raised by the package derives from RectificationError.

Two families map onto CLI exit codes:
- PreconditionError (exit 2): bad configuration or an input that violates
  an operation's precondition.
- NumericalContractError (exit 3): a run that started fine but broke one of
  the numerical guarantees (step cap, norm, boundary, convergence).
"""


class RectificationError(Exception):
    """Root of all package errors."""

    exit_code = 1


# =============================================================================
# Precondition / configuration errors (exit 2)
# =============================================================================

class PreconditionError(RectificationError):
    exit_code = 2


class ConfigError(PreconditionError):
    """Invalid experiment configuration. Carries every problem found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NonCoprimeIndices(PreconditionError):
    pass


class NonPositiveFrequency(PreconditionError):
    pass


class DuplicateHarmonic(PreconditionError):
    pass


class EmptyField(PreconditionError):
    pass


class ResonantComponent(PreconditionError):
    pass


class OddSampleCount(PreconditionError):
    pass


class BoxTooSmall(PreconditionError):
    pass


class UnboundPotential(PreconditionError):
    pass


class NotBichromatic(PreconditionError):
    pass


# =============================================================================
# Numerical contract violations (exit 3)
# =============================================================================

class NumericalContractError(RectificationError):
    exit_code = 3


class StepTooLarge(NumericalContractError):
    pass


class NonFiniteState(NumericalContractError):
    pass


class NormDrift(NumericalContractError):
    pass


class BoundaryContamination(NumericalContractError):
    pass


class NoConvergence(NumericalContractError):
    pass
