"""Exception types shared across the package."""


class SbpqError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SbpqError):
    """A network config file is malformed or internally inconsistent."""


class PolicyError(SbpqError):
    """A priority policy does not match the network it is applied to."""


class SingularRoutingError(SbpqError):
    """I - P is numerically singular: the network is not open."""


class AssumptionFailure(SbpqError):
    """A structural assumption required by the heavy-traffic theory fails.

    Analysis of the offending policy is aborted; the failure is reported
    as a per-policy tag rather than a toolkit crash.
    """


class SingularHighBlock(AssumptionFailure):
    """The high-priority block of the balance matrix is not invertible."""


class NotPMatrix(AssumptionFailure):
    """The reflection matrix failed the P-matrix check."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DimensionTooLarge(SbpqError):
    """Exhaustive principal-minor enumeration was refused (too many stations)."""


class CombinatorialGuard(SbpqError):
    """Policy enumeration would exceed the configured policy-count limit."""


class NegativeServiceMean(SbpqError):
    """A scale-family member would have a non-positive mean service time."""


class DegenerateJoint(SbpqError):
    """Joint entropy is zero (single atom); the dependence ratio is undefined."""


class InternalConsistencyError(SbpqError):
    """Two mathematically equivalent computations disagreed: a wiring bug."""
