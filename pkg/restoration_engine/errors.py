# restoration_engine/errors.py
"""Exception hierarchy. Everything derives from ValueError so callers that
only care about "bad input" can keep catching ValueError."""


class RestorationError(ValueError):
    """Base class for all errors raised by the restoration engine."""


class InvalidRegionError(RestorationError):
    """A service region with non-positive or missing dimensions."""


class InvalidTreeError(RestorationError):
    """A power network that is not a tree rooted at the source."""


class InfeasibleStateError(RestorationError):
    """A belief state that violates the feasibility rules."""


class InvalidActionError(RestorationError):
    """An action outside the available set U1 ∪ Up of a state."""


class InvalidRouteError(RestorationError):
    """A route that cannot be scanned (for example k larger than the route)."""


class OracleSizeError(RestorationError):
    """Instance too large for exhaustive enumeration."""


class ConfigurationError(RestorationError):
    """Unreadable or invalid configuration / manifest / instance file."""


class TableFormatError(RestorationError):
    """Corrupt or version-mismatched value-table file."""
