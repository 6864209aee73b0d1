"""Exception types raised across the package."""


class LayerwiseError(Exception):
    pass


class DimensionMismatch(LayerwiseError, ValueError):
    pass


class NonOrthonormalDirections(LayerwiseError, ValueError):
    pass


class ZeroFunction(LayerwiseError, ValueError):
    pass


class OddWidth(LayerwiseError, ValueError):
    pass


class NotAtInit(LayerwiseError, RuntimeError):
    pass


class StepSizeTooLarge(LayerwiseError, ValueError):
    pass


class NonFinite(LayerwiseError, FloatingPointError):
    pass


class SingularSystem(LayerwiseError, ArithmeticError):
    pass


class InsufficientPrecision(LayerwiseError, RuntimeError):
    pass


class ZeroMatrix(LayerwiseError, ValueError):
    pass


class DomainError(LayerwiseError, ValueError):
    pass


class ConstructionFailed(LayerwiseError, RuntimeError):
    pass


class IndexOutOfRange(LayerwiseError, IndexError):
    pass
