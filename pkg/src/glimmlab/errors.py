"""Exception types shared across the package."""


class GlimmLabError(Exception):
    """Base class for all package errors."""


class DegenerateGrid(GlimmLabError):
    pass


class NotStrictlyHyperbolic(GlimmLabError):
    pass


class OutOfDomain(GlimmLabError):
    pass


class AmbiguousClassification(GlimmLabError):
    pass


class Delta0TooLarge(GlimmLabError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NoConvergence(GlimmLabError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DomainEscape(GlimmLabError):
    pass


class DataTooLarge(GlimmLabError):
    pass


class EmptyRange(GlimmLabError):
    pass


class TVBudgetExceeded(GlimmLabError):
    pass


class CFLViolation(GlimmLabError):
    pass


class WindowTooSmall(GlimmLabError):
    pass


class EmptyInterval(GlimmLabError):
    pass


class RhoTooSmall(GlimmLabError):
    pass


class ConfigError(GlimmLabError):
    pass
