class GeexError(Exception):
    """
    Root of every error raised by the package.
    Attributes:
        exit_code (int): Process exit code the command-line frontend maps this error to.
    """

    exit_code = 1


# usage, parse and configuration errors (exit 2)


class UsageError(GeexError, ValueError):
    exit_code = 2


class ParseError(GeexError, ValueError):
    exit_code = 2


class VersionMismatch(ParseError):
    pass


class AlphaOutOfRange(GeexError, ValueError):
    exit_code = 2


class EvenKernel(GeexError, ValueError):
    exit_code = 2


class BadBudget(GeexError, ValueError):
    exit_code = 2


class OddWithMirror(BadBudget):
    pass


class BudgetTooSmall(BadBudget):
    pass


class BudgetNotDivisible(BadBudget):
    pass


class BadBudgetList(BadBudget):
    pass


class BadClass(GeexError, ValueError):
    exit_code = 2


class BadArch(GeexError, ValueError):
    exit_code = 2


class EmptyDataset(GeexError, ValueError):
    exit_code = 2


class BadCount(GeexError, ValueError):
    exit_code = 2


class BadLength(GeexError, ValueError):
    exit_code = 2


# shape errors (exit 3)


class ShapeMismatch(GeexError, ValueError):
    exit_code = 3


class NotTwoDimensional(ShapeMismatch):
    pass


# capability errors (exit 4)


class NotWhiteBox(GeexError, TypeError):
    exit_code = 4

    def __init__(self, message="white-box capability required"):
        super().__init__(message)


# numeric guards (exit 5)


class NonFiniteValue(GeexError, ArithmeticError):
    exit_code = 5


class ZeroConfidence(GeexError, ArithmeticError):
    exit_code = 5
