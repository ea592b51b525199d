"""Exception hierarchy shared by the library and the CLI."""


class CpmargError(Exception):
    """Base class for all errors raised by cpmarg."""


class ContractViolation(CpmargError, ValueError):
    """An argument violates a documented precondition or type invariant."""


class EvaluationError(CpmargError, ArithmeticError):
    """A numeric evaluation produced an unusable value (NaN, zero denominator, ...)."""


class GuardRefusal(CpmargError):
    """Enumeration refused because the configuration count exceeds the guard."""

    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(
            f"refusing to enumerate {count} changepoint configurations (guard is {limit})"
        )


class CapabilityError(CpmargError, TypeError):
    """A segment model lacks a capability an operation needs (e.g. gradients)."""


class ParseError(ContractViolation):
    """A data file could not be parsed."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")
