"""Exception hierarchy for causal_bounds."""


class CausalBoundsError(Exception):
    """Base class for every error raised by this package."""


class DataError(CausalBoundsError, ValueError):
    pass


class MissingColumn(DataError):
    pass


class NonBinaryTreatment(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class EmptyArm(DataError):
    pass


class ParseError(CausalBoundsError, ValueError):
    pass


class UnknownCovariate(CausalBoundsError, ValueError):
    pass


class DuplicateTerm(CausalBoundsError, ValueError):
    pass


class SeparationDetected(CausalBoundsError):
    pass


class RankDeficientDesign(CausalBoundsError):
    pass


class NoConvergence(CausalBoundsError):
    pass


class InconsistentRows(CausalBoundsError):
    pass


class NumericalBreakdown(CausalBoundsError):
    pass


class InfeasiblePolytope(CausalBoundsError):
    pass


class TooFewUnits(CausalBoundsError, ValueError):
    pass


class AllReplicatesInfeasible(CausalBoundsError):
    pass


class UsageError(CausalBoundsError):
    pass
