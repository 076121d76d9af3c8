"""Exception types raised by the solver."""


class PlatoonError(Exception):
    """Base class for all solver errors."""


class InstanceInvalid(PlatoonError):
    """The problem instance violates one of its invariants."""


class DisconnectedNetwork(InstanceInvalid):
    """Some required node pair has no connecting path."""


class DemandExceedsCapacity(InstanceInvalid):
    """A single customer demand is larger than the truck capacity."""


class MalformedSolution(PlatoonError):
    """A solution is structurally broken (not merely infeasible)."""


class Infeasible(PlatoonError):
    """Fixed routes admit no schedule that meets every time window."""

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause


class SizeLimitExceeded(PlatoonError):
    """The exact scheduler refuses instances above its size cap."""


class NoFeasibleSolutionFound(PlatoonError):
    """The iterative solver never produced a feasible schedule."""

    def __init__(self, message, last_cause=None):
        super().__init__(message)
        self.last_cause = last_cause
