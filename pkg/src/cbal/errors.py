"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`CBALError`,
so callers can catch one type at the boundary (the CLI does exactly that).
"""


class CBALError(Exception):
    """Base class for all package errors."""


# validation of inputs
class ValidationError(CBALError, ValueError):
    pass


class RowNotStochastic(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class InvalidDistribution(ValidationError):
    pass


class BudgetMismatch(ValidationError):
    pass


class InvalidCycle(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


# solvers
class SolverError(CBALError):
    pass


class InfeasibleBudget(SolverError, ValueError):
    pass


class InstanceTooLarge(SolverError):
    pass


class Timeout(SolverError):
    pass


class NumericalFailure(SolverError):
    pass


class LPInfeasible(SolverError):
    """Raised by the simplex routines when the relaxation has no feasible point."""


# simulator and configuration
class DegenerateSpec(ValidationError):
    pass


class IndivisibleInit(ValidationError):
    pass


class EmptyLabeledSet(ValidationError):
    pass


class BudgetExceedsPool(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    pass


class ConfigParse(CBALError):
    pass


class NoPlateau(CBALError):
    pass


class OutputUnwritable(CBALError, OSError):
    pass
