"""Exception types shared across the package."""


class RobLocError(Exception):
    """Base class for every error raised by robloc."""


class GraphError(RobLocError, ValueError):
    """Malformed graph, vertex id or subdivision."""


class ProtocolViolation(RobLocError):
    """A probe answer is inconsistent with every tracked robber position."""


class IllegalMove(RobLocError):
    """A robber policy tried to move further than one step."""


class StrategyError(RobLocError):
    """A strategy met a situation its case analysis does not cover.

    For the constructive strategies this is the executable form of a proof step
    failing, so it is never swallowed silently.
    """


class ResourceLimit(RobLocError):
    """A configured state or depth budget was exhausted before an answer."""
