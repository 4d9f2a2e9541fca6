"""Exception hierarchy shared by every module."""


class DynMatchError(Exception):
    pass


class InstanceError(DynMatchError, ValueError):
    pass


class WindowViolation(InstanceError):
    def __init__(self, i, j, d):
        super().__init__(f"edge ({i},{j}) spans {j - i} steps, window is d={d}")
        self.i, self.j, self.d = i, j, d


class NegativeValue(InstanceError):
    def __init__(self, i, j, value=None):
        super().__init__(f"edge ({i},{j}) has negative value {value!r}")
        self.i, self.j = i, j


class BadDeadlineLength(InstanceError):
    pass


class DuplicateVertex(DynMatchError, KeyError):
    pass


class UnknownSeller(DynMatchError, KeyError):
    pass


class BuyerStillMatched(DynMatchError):
    pass


class NumericalInstability(DynMatchError, ArithmeticError):
    pass


class RoleConflict(DynMatchError):
    pass


class CycleDetected(DynMatchError):
    pass


class BudgetExceeded(DynMatchError):
    pass


class BadParameters(DynMatchError, ValueError):
    pass


class EmptyDataset(DynMatchError, ValueError):
    pass


class ConfigError(DynMatchError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
