"""Exception hierarchy shared by all modules."""


class LadderError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LadderError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GridRangeError(LadderError, ValueError):
    """A requested abscissa is not covered by the cumulative grid."""


class ResourceError(LadderError):
    """A configured size cap (sieve limit, node cap) would be exceeded."""


class BracketError(LadderError):
    """A root bracket could not be established (monotonicity violated)."""


class ConvergenceError(LadderError):
    """An iterative method hit its iteration cap or missed its tolerance."""


class IterationUnderflowError(LadderError):
    """A forward iterate dropped below the admissible threshold T0."""


class AdmissibilityError(LadderError, ValueError):
    """A segment length violates the admissibility gate U <= T / (10 ln T)."""


class InvariantError(LadderError):
    """A structural invariant (ordering, membership, image) failed."""


class PrecisionWarning(UserWarning):
    """Accuracy of a result could not be certified at the requested level."""
