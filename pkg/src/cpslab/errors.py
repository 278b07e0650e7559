"""Exception types raised across cpslab."""


class CpsError(Exception):
    """Base class for all cpslab errors."""


class MoveForbidden(CpsError):
    """A particle move whose rate would be zero (empty source or full target)."""


class TruncationExceeded(CpsError):
    """An occupancy beyond the truncation level of a countable range was requested."""


class TruncationInsufficient(CpsError):
    """The truncation level is too low to bound the neglected tail mass."""


class RadiusExceeded(CpsError):
    """A fugacity at or above the radius of convergence of the partition sum."""


class TailBudgetExceeded(CpsError):
    """Accumulated truncation loss during convolution exceeded its budget."""


class NumericalUnderflow(CpsError):
    pass


class Unsupported(CpsError):
    pass


class UnsupportedFunction(CpsError):
    """The test function is not local (no finite support declared)."""


class EmptySet(CpsError):
    pass


class IdentityViolation(CpsError):
    """Two routes that must agree by an exact identity disagreed numerically."""
