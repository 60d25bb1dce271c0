"""Exception hierarchy shared by every module."""


class RelayPosError(Exception):
    """Base class for all errors raised by relaypos."""


class InvalidScenario(RelayPosError, ValueError):
    """Scenario data is missing, malformed or out of range."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DegenerateGeometry(RelayPosError, ValueError):
    """Coincident points or zero-length distances where a positive one is needed."""


class ModelContract(RelayPosError, ValueError):
    """A rate model failed one of its construction probes."""

    def __init__(self, message, probe=None):
        self.probe = probe
        super().__init__(message)


class RateInfeasible(RelayPosError, ValueError):
    """Requested rate is outside the range the model can deliver."""


class TargetInfeasible(RelayPosError):
    """Target flow exceeds what the scenario can carry."""

    def __init__(self, message, max_flow=None):
        self.max_flow = max_flow
        super().__init__(message)


class OracleTooLarge(RelayPosError):
    """Brute-force enumeration requested on an instance that is too large."""


class ConsistencyError(RelayPosError):
    """Internal cross-check between two solvers disagreed."""
