"""Exception types shared across the package.

Every error raised on a violated contract derives from :class:`SymwickError`
so callers can catch the package's failures with one handler.
"""


class SymwickError(Exception):
    """Base class for all symwick contract violations."""


class DuplicateTime(SymwickError):
    """Two factors share an ordering coordinate where distinctness is required."""


class MissingBranchTag(SymwickError):
    """A factor lacks (or contradicts) the contour-branch tag an operation needs."""


class SizeLimit(SymwickError):
    """A combinatorial expansion would exceed the supported size."""


class KindMismatch(SymwickError):
    """A kernel was evaluated (or configured) with an incompatible kind."""


class EqualRank(SymwickError):
    """Two ordering ranks compare equal under the supplied comparator."""


class DimensionLimit(SymwickError):
    """The requested Fock-space dimension exceeds the configured limit."""


class OrderViolation(SymwickError):
    """Time arguments violate the ordering a response formula requires."""


class EqualTime(SymwickError):
    """Equal probe/source times where the two-point reordering is undefined."""


class UnsupportedState(SymwickError):
    """An initial-state kind outside the supported positive-Wigner family."""


class StepMismatch(SymwickError):
    """Grid spacing, kick times and integrator step do not line up."""


class TimeOffGrid(SymwickError):
    """A requested time does not lie on the stored trajectory grid."""


class ConfigError(SymwickError):
    """A run-configuration field is missing or invalid (message carries the path)."""
