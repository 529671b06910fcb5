"""Exception hierarchy shared by all modules.

Each error carries the CLI exit code it maps to, so the command line layer
can translate failures without inspecting messages.
"""

from __future__ import annotations


class DiscwalkError(Exception):
    exit_code = 1


class InvalidInput(DiscwalkError, ValueError):
    exit_code = 4


class InvalidProblem(InvalidInput):
    pass


class GuardRefusal(DiscwalkError):
    """A size guard refused to run an exhaustive or expensive computation."""

    exit_code = 2


class RefuseTooLarge(GuardRefusal):
    pass


class NumericalError(DiscwalkError, ArithmeticError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class EigenError(NumericalError):
    pass


class NotPSD(NumericalError):
    def __init__(self, message: str, lambda_min: float):
        super().__init__(message, residual=lambda_min)
        self.lambda_min = lambda_min


class SolverStall(NumericalError):
    """The UVC solver could not reach the trace guarantee."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class StrategyViolation(DiscwalkError):
    pass


class WitnessRejected(DiscwalkError):
    pass


class NonTerminated(DiscwalkError):
    exit_code = 3

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result
