"""
Exception types raised by swipt-balance.

Every error carries a human readable message; the CLI prints it and exits
with a nonzero status.
"""


class SwiptError(Exception):
    """Base class for all library errors."""


class RankDeficient(SwiptError):
    """A matrix that must have full column rank does not."""


class NotHermitian(SwiptError):
    """An eigen-decomposition input is not Hermitian positive semidefinite."""


class DimensionError(SwiptError):
    """Shapes or system dimensions are incompatible with the operation."""


class InfeasibleSystem(SwiptError):
    """The (M x N, d)^K system fails the configured feasibility gate."""


class SplitAllEnergy(SwiptError):
    """rho_k = 0: the receiver has no information-decoding branch."""


class AllPowerToID(SwiptError):
    """Every rho_k = 1: there is no energy-harvesting objective."""


class NotConverged(SwiptError):
    """An iterative solver hit its iteration cap before meeting its tolerance."""


class SingularChannel(SwiptError):
    """A channel matrix that must be inverted is (numerically) singular."""


class BadDistance(SwiptError):
    """A chordal-distance displacement request is inconsistent."""


class BadZ(SwiptError):
    """A target chordal distance is outside its admissible range."""


class SingularY(SwiptError):
    """A Y component has a zero diagonal entry where its inverse is needed."""


class SingularCovariance(SwiptError):
    """An interference-plus-noise covariance is not positive definite."""


class TooLarge(SwiptError):
    """A requested object exceeds the desk-scale caps."""


class DegenerateK(SwiptError):
    """The operation needs at least two users."""


class ConfigError(SwiptError):
    """An experiment or system configuration is invalid."""
