"""Exception hierarchy shared by every module."""


class VmBalanceError(Exception):
    """Base class for all errors raised by this package."""


class CapacityExceeded(VmBalanceError):
    pass


class FamilyMismatch(VmBalanceError):
    pass


class NotAssigned(VmBalanceError):
    pass


class EmptyWindow(VmBalanceError):
    pass


class NoActivePms(VmBalanceError):
    pass


class EmptySchedule(VmBalanceError):
    pass


class InfeasibleInstance(VmBalanceError):
    """A request cannot be hosted on any machine of the pool."""

    def __init__(self, request_id, reason="no feasible PM"):
        self.request_id = request_id
        self.reason = reason
        super().__init__(f"request {request_id!r} cannot be placed: {reason}")


class InvalidK(VmBalanceError):
    pass


class DegenerateSplit(VmBalanceError):
    pass


class InvalidConfig(VmBalanceError):
    pass


class MalformedLine(VmBalanceError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


class EmptyTrace(VmBalanceError):
    pass


class InvalidParams(VmBalanceError):
    pass


class TooLarge(VmBalanceError):
    pass


class Infeasible(VmBalanceError):
    pass


class BoundViolated(VmBalanceError):
    def __init__(self, message, counterexample=None):
        self.counterexample = counterexample
        super().__init__(message)
