"""Exception types raised across the package."""


class EroError(Exception):
    """Base class for all package errors."""


class InvalidParameter(EroError, ValueError):
    pass


class ConstantScores(EroError):
    """The score vector has no spread, so there is no signal direction."""


class ZeroExpectedDegree(EroError):
    pass


class ZeroMatrix(EroError):
    pass


class ZeroVector(EroError, ValueError):
    pass


class NoConvergence(EroError):
    def __init__(self, max_iter, residual=float("nan"), reason="residual above tolerance"):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(f"no convergence after {max_iter} iterations ({reason}, residual={residual:.3g})")


class IsolatedNode(EroError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"item {index} has no observed comparisons")


class TooLarge(EroError, ValueError):
    pass


class NotAPermutation(EroError, ValueError):
    pass


class OutOfRegime(EroError):
    pass


class NonRectangularGrid(EroError, ValueError):
    pass


class ConfigError(EroError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
