"""Exception hierarchy shared by every module of the engine."""


class QuotamechError(Exception):
    """Base class for all engine errors."""


class StructuralError(QuotamechError, ValueError):
    """Malformed input: unknown ids, inconsistent shapes, invalid quotas."""


class ContractError(QuotamechError, ValueError):
    """An operation was called outside its precondition."""


class NotLaminar(ContractError):
    pass


class InfeasibleInstance(QuotamechError):
    """The fractional program over the instance has no feasible point."""


class InvariantViolation(QuotamechError, AssertionError):
    """An internal invariant failed. Always indicates an engine bug."""


class ApproxFeasibilityViolated(QuotamechError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SearchTooLarge(QuotamechError):
    """Exhaustive search would exceed the configured cap."""


class FlowInfeasible(QuotamechError):
    """No flow satisfies every lower bound."""
