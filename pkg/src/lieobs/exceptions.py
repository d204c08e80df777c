class LieObsError(Exception):
    """Base class for errors raised by lieobs."""


class UsageError(LieObsError, ValueError):
    """Bad arguments: mismatched groups, wrong dimensions, unknown names."""


class MembershipError(LieObsError, ValueError):
    """A matrix is too far from the group to be silently reprojected."""


class SingularityError(LieObsError, ArithmeticError):
    """The principal logarithm is requested too close to its cut locus."""


class IntegrationError(LieObsError, ArithmeticError):
    """A vector field returned non-finite values during a step."""


class DivergenceError(LieObsError, RuntimeError):
    """The observer cost exceeded the divergence guard."""


class ChannelError(LieObsError, IndexError):
    """A replayable noise trace does not cover the requested time."""
